"""Normal-form games with query-counted loss oracles, plus generators.

Players and actions are 0-indexed. A game with ``m`` players and ``n``
actions per player maps every action profile ``a in [n]^m`` to a loss vector
in ``[0, B]^m``. All loss evaluations made on behalf of an algorithm go
through :meth:`NormalFormGame.loss`, :meth:`~NormalFormGame.loss_vector` or
:meth:`~NormalFormGame.loss_matrix`, each of which charges a
:class:`QueryCounter` one unit per evaluated ``(player, profile)`` pair.
"""

from __future__ import annotations

import json
import threading

import numpy as np

from ._validation import (
    InputDomainError,
    check_positive,
    check_positive_int,
    check_rng,
)

DEFAULT_MAX_ENTRIES = 10**8
# Dense tables used only to accelerate compiled solver loops.
DENSE_CACHE_ENTRIES = 2 * 10**6

GAME_FORMATS = {
    "nfg-explicit-v1": ["format", "players", "actions", "loss_bound", "losses"],
    "nfg-hard-v1": ["format", "players", "actions", "loss_bound", "targets"],
    "nfg-congestion-v1": ["format", "players", "actions", "loss_bound", "costs"],
    "nfg-counterexample-v1": ["format"],
    "nfg-random-v1": ["format", "players", "actions", "loss_bound", "seed"],
}


class QueryCounter:
    """Monotone count of single-profile loss evaluations.

    Increments are guarded by a lock so concurrent solvers sharing one counter
    never lose updates.
    """

    def __init__(self):
        self._count = 0
        self._lock = threading.Lock()

    @property
    def count(self) -> int:
        return self._count

    def add(self, k: int = 1) -> None:
        k = int(k)
        if k < 0:
            raise InputDomainError("query counts never decrease")
        with self._lock:
            self._count += k

    def __repr__(self):
        return f"QueryCounter(count={self._count})"


def _charge(counter, k):
    if counter is not None:
        counter.add(k)


class NormalFormGame:
    """Base class: ``m`` players, ``n`` actions each, losses in ``[0, B]``.

    Subclasses implement :meth:`_evaluate`, a vectorised loss lookup for one
    player over a batch of profiles. Games are immutable after construction.
    """

    kind = "abstract"

    def __init__(self, players, actions, loss_bound):
        self.players = check_positive_int(players, "players")
        self.actions = check_positive_int(actions, "actions")
        self.loss_bound = float(loss_bound)
        if not np.isfinite(self.loss_bound) or self.loss_bound < 0:
            raise InputDomainError(f"loss_bound must be finite and >= 0, got {loss_bound}")
        self._dense_cache = None
        self._dense_lock = threading.Lock()

    # -- subclass hook -----------------------------------------------------
    def _evaluate(self, player: int, profiles: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    # -- validation ----------------------------------------------------------
    @property
    def num_profiles(self) -> int:
        return self.actions**self.players

    def _check_player(self, player):
        if isinstance(player, bool) or not isinstance(player, (int, np.integer)):
            raise InputDomainError(f"player index must be an integer, got {player!r}")
        if not 0 <= player < self.players:
            raise InputDomainError(f"player {player} out of range [0, {self.players})")
        return int(player)

    def check_profiles(self, profiles) -> np.ndarray:
        """Return ``profiles`` as an ``(N, m)`` int array, rejecting bad entries."""
        arr = np.asarray(profiles)
        if arr.ndim == 1:
            arr = arr[None, :]
        if arr.ndim != 2 or arr.shape[1] != self.players:
            raise InputDomainError(
                f"profiles must have length {self.players}, got shape {np.shape(profiles)}"
            )
        if arr.size and not np.issubdtype(arr.dtype, np.integer):
            if not np.all(np.equal(np.mod(arr, 1), 0)):
                raise InputDomainError("action indices must be integers")
        arr = arr.astype(np.int64, copy=False)
        if arr.size and (arr.min() < 0 or arr.max() >= self.actions):
            raise InputDomainError(f"action index out of range [0, {self.actions})")
        return arr

    # -- counted oracle access -----------------------------------------------
    def loss(self, player, profile, counter=None) -> float:
        """Loss of ``player`` at a single profile; costs one query."""
        player = self._check_player(player)
        prof = self.check_profiles(profile)
        if prof.shape[0] != 1:
            raise InputDomainError("loss() takes exactly one profile")
        _charge(counter, 1)
        return float(self._evaluate(player, prof)[0])

    def loss_vector(self, player, profile, counter=None) -> np.ndarray:
        """Losses ``L_i(j, a_{-i})`` for every action ``j``; costs ``n`` queries."""
        prof = self.check_profiles(profile)
        if prof.shape[0] != 1:
            raise InputDomainError("loss_vector() takes exactly one profile")
        return self.loss_matrix(player, prof, counter)[0]

    def loss_matrix(self, player, profiles, counter=None) -> np.ndarray:
        """``(N, n)`` array of ``L_i(j, a^{(s)}_{-i})``; costs ``N * n`` queries."""
        player = self._check_player(player)
        prof = self.check_profiles(profiles)
        N, n = prof.shape[0], self.actions
        batch = np.repeat(prof[:, None, :], n, axis=1)
        batch[:, :, player] = np.arange(n)[None, :]
        _charge(counter, N * n)
        return self._evaluate(player, batch.reshape(N * n, self.players)).reshape(N, n)

    def loss_table(self, player, counter=None) -> np.ndarray:
        """Full tensor of shape ``(n,) * m`` for one player; costs ``n**m`` queries."""
        player = self._check_player(player)
        _charge(counter, self.num_profiles)
        return self._dense()[player].reshape((self.actions,) * self.players)

    # -- uncounted helpers -----------------------------------------------------
    def all_profiles(self) -> np.ndarray:
        """Every profile in row-major order (last player's action varies fastest)."""
        grids = np.indices((self.actions,) * self.players).reshape(self.players, -1)
        return grids.T.copy()

    def supports_dense(self) -> bool:
        return self.players * self.num_profiles <= DENSE_CACHE_ENTRIES

    def _dense(self) -> np.ndarray:
        # Cache of the loss function used by compiled solver loops. Callers
        # charge the counter for every entry they actually read.
        if self._dense_cache is None:
            with self._dense_lock:
                if self._dense_cache is None:
                    if self.players * self.num_profiles > DEFAULT_MAX_ENTRIES:
                        raise InputDomainError("game too large to tabulate")
                    prof = self.all_profiles()
                    table = np.stack([self._evaluate(i, prof) for i in range(self.players)])
                    table.setflags(write=False)
                    self._dense_cache = table
        return self._dense_cache

    # -- serialisation -----------------------------------------------------------
    def to_dict(self) -> dict:
        raise NotImplementedError

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    def __repr__(self):
        return (
            f"{type(self).__name__}(players={self.players}, actions={self.actions}, "
            f"loss_bound={self.loss_bound:g})"
        )


class ExplicitGame(NormalFormGame):
    """Game stored as a dense loss tensor of shape ``(m, n, ..., n)``."""

    kind = "explicit"

    def __init__(self, losses, loss_bound=None, *, kind="explicit", seed=None,
                 max_entries=DEFAULT_MAX_ENTRIES):
        arr = np.asarray(losses, dtype=np.float64)
        if arr.ndim < 2:
            raise InputDomainError("loss tensor must have shape (m, n, ..., n)")
        m, n = arr.shape[0], arr.shape[1]
        if arr.ndim != m + 1 or any(d != n for d in arr.shape[1:]):
            raise InputDomainError(
                f"loss tensor shape {arr.shape} is not (m, n, ..., n) with uniform n"
            )
        if arr.size > max_entries:
            raise InputDomainError(
                f"explicit game needs {arr.size} entries, above the cap of {max_entries}"
            )
        if not np.all(np.isfinite(arr)):
            raise InputDomainError("loss tensor has non-finite entries")
        if loss_bound is None:
            loss_bound = float(arr.max()) if arr.size else 0.0
        super().__init__(m, n, loss_bound)
        if arr.min() < 0 or arr.max() > self.loss_bound:
            raise InputDomainError(f"losses must lie in [0, {self.loss_bound}]")
        self.kind = kind
        self.seed = seed
        self._losses = arr.copy()
        self._losses.setflags(write=False)
        self._flat = self._losses.reshape(m, -1)

    @property
    def losses(self) -> np.ndarray:
        return self._losses

    def _evaluate(self, player, profiles):
        idx = np.ravel_multi_index(tuple(profiles.T), (self.actions,) * self.players)
        return self._flat[player, idx]

    def _dense(self):
        return self._flat

    def to_dict(self):
        if self.kind == "counterexample":
            return {"format": "nfg-counterexample-v1"}
        if self.kind == "random_seeded" and self.seed is not None:
            return {"format": "nfg-random-v1", "players": self.players,
                    "actions": self.actions, "loss_bound": self.loss_bound,
                    "seed": int(self.seed)}
        return {"format": "nfg-explicit-v1", "players": self.players,
                "actions": self.actions, "loss_bound": self.loss_bound,
                "losses": self._losses.tolist()}


class HardInstance(NormalFormGame):
    """Each player loses 0 on its secret target action and ``B`` elsewhere."""

    kind = "hard_instance"

    def __init__(self, players, actions, loss_bound, targets):
        super().__init__(players, actions, loss_bound)
        t = np.asarray(targets)
        if t.shape != (self.players,):
            raise InputDomainError(f"targets must have length {self.players}")
        if not np.issubdtype(t.dtype, np.integer):
            raise InputDomainError("targets must be integers")
        if t.min() < 0 or t.max() >= self.actions:
            raise InputDomainError(f"targets must lie in [0, {self.actions})")
        self._targets = t.astype(np.int64)
        self._targets.setflags(write=False)

    @property
    def targets(self) -> np.ndarray:
        # For scoring in the reduction harness; solvers never read this.
        return self._targets

    def _evaluate(self, player, profiles):
        hit = profiles[:, player] == self._targets[player]
        return np.where(hit, 0.0, self.loss_bound)

    def to_dict(self):
        return {"format": "nfg-hard-v1", "players": self.players,
                "actions": self.actions, "loss_bound": self.loss_bound,
                "targets": self._targets.tolist()}


class CongestionGame(NormalFormGame):
    """Singleton congestion game: each action is one resource.

    ``costs[j][l - 1]`` is the loss of every player on resource ``j`` when
    ``l`` players share it.
    """

    kind = "congestion"

    def __init__(self, players, actions, costs, loss_bound=None):
        c = np.asarray(costs, dtype=np.float64)
        players = check_positive_int(players, "players")
        actions = check_positive_int(actions, "actions")
        if c.shape != (actions, players):
            raise InputDomainError(
                f"cost table must have shape ({actions}, {players}), got {c.shape}"
            )
        if not np.all(np.isfinite(c)):
            raise InputDomainError("cost table has non-finite entries")
        if np.any(np.diff(c, axis=1) < 0):
            raise InputDomainError("each resource's cost must be nondecreasing in load")
        if loss_bound is None:
            loss_bound = float(c.max())
        super().__init__(players, actions, loss_bound)
        if c.min() < 0 or c.max() > self.loss_bound:
            raise InputDomainError(f"cost values must lie in [0, {self.loss_bound}]")
        self._costs = c
        self._costs.setflags(write=False)

    @property
    def costs(self) -> np.ndarray:
        return self._costs

    def _evaluate(self, player, profiles):
        mine = profiles[:, player]
        load = (profiles == mine[:, None]).sum(axis=1)
        return self._costs[mine, load - 1]

    def to_dict(self):
        return {"format": "nfg-congestion-v1", "players": self.players,
                "actions": self.actions, "loss_bound": self.loss_bound,
                "costs": self._costs.tolist()}


# -- generators -------------------------------------------------------------------

_COUNTEREXAMPLE_PLAYER1 = [
    [1.0, 3.0, 2.0, 2.0],
    [2.0, 2.0, 2.0, 2.0],
    [2.0, 2.0, 2.0, 2.0],
    [3.0, 1.0, 2.0, 2.0],
]


def make_counterexample_game() -> ExplicitGame:
    """Two players, four actions (A-D): a distribution that is a CCE but not a CE.

    Player 1 (index 0) chooses the row, player 2 the column. Every loss of
    player 2 is 2.
    """
    losses = np.stack([np.array(_COUNTEREXAMPLE_PLAYER1), np.full((4, 4), 2.0)])
    return ExplicitGame(losses, loss_bound=3.0, kind="counterexample")


def make_hard_instance(players, actions, loss_bound=1.0, targets=None, seed=None):
    """Hard search instance; targets drawn uniformly from ``seed`` when not given."""
    players = check_positive_int(players, "players")
    actions = check_positive_int(actions, "actions")
    loss_bound = check_positive(loss_bound, "loss_bound")
    if targets is None:
        rng = check_rng(seed)
        targets = rng.integers(0, actions, size=players)
    return HardInstance(players, actions, loss_bound, targets)


def make_congestion_game(players, actions, cost_table, loss_bound=None):
    return CongestionGame(players, actions, cost_table, loss_bound=loss_bound)


def make_random_congestion_game(players, actions, loss_bound=1.0, seed=None):
    """Random singleton congestion game with nondecreasing costs in ``[0, B]``."""
    rng = check_rng(seed)
    loss_bound = check_positive(loss_bound, "loss_bound")
    raw = np.sort(rng.uniform(0.0, loss_bound, size=(actions, players)), axis=1)
    return CongestionGame(players, actions, raw, loss_bound=loss_bound)


def make_random_game(players, actions, loss_bound=1.0, seed=0):
    """Explicit game with i.i.d. uniform losses in ``[0, B]``, reproducible from ``seed``."""
    players = check_positive_int(players, "players")
    actions = check_positive_int(actions, "actions")
    loss_bound = check_positive(loss_bound, "loss_bound")
    rng = np.random.default_rng(seed)
    losses = rng.uniform(0.0, loss_bound, size=(players,) + (actions,) * players)
    return ExplicitGame(losses, loss_bound, kind="random_seeded", seed=seed)


# -- JSON ---------------------------------------------------------------------------

def _require(d, keys):
    missing = [k for k in keys if k not in d]
    if missing:
        raise InputDomainError(f"game JSON is missing field(s): {', '.join(missing)}")


def game_from_dict(d: dict) -> NormalFormGame:
    if not isinstance(d, dict) or "format" not in d:
        raise InputDomainError("game JSON must be an object with a 'format' field")
    fmt = d["format"]
    if fmt not in GAME_FORMATS:
        raise InputDomainError(f"unknown game format {fmt!r}")
    _require(d, GAME_FORMATS[fmt])
    if fmt == "nfg-counterexample-v1":
        return make_counterexample_game()
    m, n, B = d["players"], d["actions"], d["loss_bound"]
    if fmt == "nfg-explicit-v1":
        game = ExplicitGame(d["losses"], B)
        if (game.players, game.actions) != (m, n):
            raise InputDomainError("declared players/actions do not match the loss tensor")
        return game
    if fmt == "nfg-hard-v1":
        return HardInstance(m, n, B, d["targets"])
    if fmt == "nfg-congestion-v1":
        return CongestionGame(m, n, d["costs"], loss_bound=B)
    return make_random_game(m, n, B, seed=d["seed"])


def game_from_json(text: str) -> NormalFormGame:
    return game_from_dict(json.loads(text))


def load_game(path) -> NormalFormGame:
    with open(path) as fh:
        return game_from_dict(json.load(fh))
