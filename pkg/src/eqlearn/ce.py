"""Sample-based multi-scale MWU for correlated equilibria.

Every player runs ``2**K`` MWU instances at geometrically growing time scales.
Instance ``k`` aggregates the sampled average losses over the completed
sub-blocks (length ``H**(k-1)``) of the current block (length ``H**k``) and
plays the Gibbs law over ``sqrt(ln n / H)`` times that sum. Each round, every
player draws ``S`` actions, each from a uniformly chosen instance, and the
resulting profiles are stored; later windows are evaluated against them.

The certificate is the mixture ``(1/T) sum_t prod_i p_{i,t}`` of the per-round
strategy factors, or the pooled stored samples when the factors are too big
to retain.
"""

from __future__ import annotations

import base64
import json
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator

from ._validation import InputDomainError, InternalStateError, check_rng
from .distributions import MixtureOfProducts, SparseJoint
from .games import QueryCounter
from .gibbs import gibbs_rows, normalize_noise_mode, perturb_rows
from .mwu import MsParams, ms_params, ms_schedule
from .verify import verify_ce

STRATEGY_MEMORY_CAP = 10**7  # float entries of the (T, m, n) strategy tensor
LOSS_ESTIMATES = ("sampled", "exact")


@dataclass
class CeCertificate:
    params: MsParams
    samples: np.ndarray        # (T, S, m) stored profiles
    strategies: np.ndarray     # (T, m, n) mixture strategies, or None
    round_losses: np.ndarray   # (T, m, n) per-round average loss vectors, or None
    query_count: int
    noise: dict
    seed: object = None
    loss_estimate: str = "sampled"

    @property
    def paper_scale(self) -> bool:
        return self.params.paper_scale

    @property
    def T(self) -> int:
        return int(self.samples.shape[0])

    def mixture(self) -> MixtureOfProducts:
        if self.strategies is None:
            raise InternalStateError("per-round strategies were not retained")
        T = self.strategies.shape[0]
        return MixtureOfProducts(np.full(T, 1.0 / T), self.strategies)

    def empirical(self) -> SparseJoint:
        m = self.samples.shape[2]
        return SparseJoint.from_samples(self.samples.reshape(-1, m), self.params.n)

    def distribution(self):
        """The retained mixture when available, else the pooled sample store."""
        return self.mixture() if self.strategies is not None else self.empirical()

    def marginal(self, player):
        return self.distribution().marginal(player)

    @classmethod
    def from_strategies(cls, strategies, n=None):
        """Degenerate certificate holding given per-round factors (no samples)."""
        P = np.asarray(strategies, dtype=np.float64)
        if P.ndim != 3:
            raise InputDomainError("strategies must have shape (T, m, n)")
        T, m, n = P.shape
        params = MsParams(K=0, H=T, T=T, S=0, delta=0.0, eps=1.0, B=1.0, n=n, m=m,
                          alpha=0.5, overrides={"T": T, "S": 0})
        return cls(params=params, samples=np.zeros((T, 0, m), dtype=np.int64),
                   strategies=P, round_losses=None, query_count=0,
                   noise={"mode": "exact", "delta": 0.0})

    def to_dict(self):
        store = np.ascontiguousarray(self.samples, dtype=np.int16 if self.params.n > 255
                                     else np.uint8)
        d = {
            "format": "ce-certificate-v1",
            "params": self.params.to_dict(),
            "paper_scale": self.paper_scale,
            "query_count": int(self.query_count),
            "noise": self.noise,
            "seed": self.seed,
            "loss_estimate": self.loss_estimate,
            "sample_store": {
                "shape": list(store.shape),
                "dtype": store.dtype.name,
                "base64": base64.b64encode(store.tobytes()).decode("ascii"),
            },
            "representation": "mixture" if self.strategies is not None else "samples",
        }
        if self.strategies is not None:
            d["strategies"] = self.strategies.tolist()
        return d

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, d):
        p = dict(d["params"])
        p.pop("paper_scale", None)
        st = d["sample_store"]
        raw = np.frombuffer(base64.b64decode(st["base64"]), dtype=st["dtype"])
        samples = raw.reshape(st["shape"]).astype(np.int64)
        strategies = d.get("strategies")
        return cls(
            params=MsParams(**p), samples=samples,
            strategies=None if strategies is None else np.asarray(strategies, dtype=np.float64),
            round_losses=None, query_count=int(d["query_count"]), noise=d["noise"],
            seed=d.get("seed"), loss_estimate=d.get("loss_estimate", "sampled"),
        )


def _round_loss(game, player, profiles, counter):
    """``(1/S) sum_s L_i(., a_{-i}^{(s)})``; charged ``n * S`` queries.

    Duplicate opponent profiles are evaluated once, but every stored sample
    is an oracle call in the accounting.
    """
    S = profiles.shape[0]
    opp = profiles.astype(np.int64)
    opp[:, player] = 0
    shape = (game.actions,) * game.players
    if game.players * np.log2(max(game.actions, 2)) < 62:
        codes, counts = np.unique(np.ravel_multi_index(opp.T, shape), return_counts=True)
        uniq = np.stack(np.unravel_index(codes, shape), axis=1)
    else:
        uniq, counts = np.unique(opp, axis=0, return_counts=True)
    L = game.loss_matrix(player, uniq)
    if counter is not None:
        counter.add(S * game.actions)
    return counts @ L / S


def windowed_loss(samples, game, player, k, t, params, counter=None):
    """Window sum for scale ``k`` at round ``t``, computed directly from the store.

    ``samples`` is the ``(rounds_stored, S, m)`` store. The solver maintains
    the same quantity incrementally; this direct form is the reference.
    """
    coords = ms_schedule(t, k, params.H)
    n = game.actions
    if coords.empty:
        return np.zeros(n)
    if coords.stop > samples.shape[0]:
        raise InternalStateError(
            f"window ends at round {coords.stop} but only {samples.shape[0]} rounds are stored"
        )
    total = np.zeros(n)
    for tau in range(coords.start, coords.stop + 1):
        total += _round_loss(game, player, samples[tau - 1], counter)
    return total


def _exact_round_loss(tables, strategies, player):
    """Expected loss vector of ``player`` when opponents play ``strategies``."""
    v = tables[player]
    m = strategies.shape[0]
    for j in range(m - 1, -1, -1):
        if j != player:
            v = np.tensordot(v, strategies[j], axes=([j], [0]))
    return v


def solve_ce(game, eps, alpha, overrides=None, noise="exact", delta=None, rng=None,
             counter=None, loss_estimate="sampled", keep_strategies=None) -> CeCertificate:
    """Run the sample-based multi-scale MWU solver.

    Parameters
    ----------
    game : NormalFormGame
    eps, alpha : float
    overrides : dict, optional
        Desk-scale replacements for any of ``K, H, T, S, delta``.
    noise : {"exact", "uniform_mix", "argmax_shift"}
        Perturbation applied to each instance's Gibbs law before sampling.
    delta : float, optional
        Noise level (defaults to ``eps / (6B)``).
    loss_estimate : {"sampled", "exact"}
        ``exact`` replaces the sampled average losses by their expectation
        under the opponents' round strategies (small games only; the full
        loss table is read once per player).
    keep_strategies : bool, optional
        Retain the ``(T, m, n)`` strategy tensor; by default it is kept when
        it has at most ``STRATEGY_MEMORY_CAP`` entries.
    """
    mode = normalize_noise_mode(noise)
    if loss_estimate not in LOSS_ESTIMATES:
        raise InputDomainError(f"loss_estimate must be one of {LOSS_ESTIMATES}")
    over = dict(overrides or {})
    if delta is not None:
        over["delta"] = delta
    m, n = game.players, game.actions
    params = ms_params(eps, game.loss_bound if game.loss_bound > 0 else 1.0, n, m, alpha, over)
    seed = rng if isinstance(rng, (int, np.integer)) else None
    rng = check_rng(rng)
    if counter is None:
        counter = QueryCounter()
    start = counter.count
    T, S, H, scales = params.T, params.S, params.H, params.scales
    eff_delta = params.delta if mode != "exact" else 0.0
    rate = params.rate
    if keep_strategies is None:
        keep_strategies = T * m * n <= STRATEGY_MEMORY_CAP
    tables = None
    if loss_estimate == "exact":
        tables = [game.loss_table(i, counter).astype(np.float64) for i in range(m)]

    store_dtype = np.uint8 if n <= 256 else np.int64
    samples = np.empty((T, S, m), dtype=store_dtype)
    strategies = np.empty((T, m, n)) if keep_strategies else None
    round_losses = np.empty((T, m, n)) if keep_strategies else None
    sub_len = [H**k for k in range(scales)]        # H^{k-1} for k = 1..2^K
    block_len = [H ** (k + 1) for k in range(scales)]
    window = np.zeros((m, scales, n))
    pending = np.zeros((m, scales, n))
    ks = np.arange(scales)

    for t in range(1, T + 1):
        q = perturb_rows(gibbs_rows(rate * window.reshape(m * scales, n)), mode, eff_delta)
        q = q.reshape(m, scales, n)
        p = q.mean(axis=1)
        # Per draw: pick an instance uniformly, then invert its CDF.
        k_draw = rng.integers(0, scales, size=(m, S))
        u = rng.random((m, S))
        cdf = np.cumsum(q, axis=2)
        profile = np.empty((S, m), dtype=np.int64)
        for i in range(m):
            c = cdf[i, k_draw[i]]
            idx = (u[i][:, None] * c[:, -1:] >= c).sum(axis=1)
            profile[:, i] = np.minimum(idx, n - 1)
        samples[t - 1] = profile
        ell = np.empty((m, n))
        for i in range(m):
            if tables is None:
                ell[i] = _round_loss(game, i, profile, counter)
            else:
                ell[i] = _exact_round_loss(tables, p, i)
        if keep_strategies:
            strategies[t - 1] = p
            round_losses[t - 1] = ell
        # Fold round t into the per-scale windows used from round t+1 on.
        pending += ell[:, None, :]
        for k in ks:
            if t % sub_len[k] == 0:
                window[:, k] += pending[:, k]
                pending[:, k] = 0.0
            if t % block_len[k] == 0:
                window[:, k] = 0.0

    return CeCertificate(
        params=params, samples=samples, strategies=strategies, round_losses=round_losses,
        query_count=counter.count - start,
        noise={"mode": mode, "delta": eff_delta}, seed=seed, loss_estimate=loss_estimate,
    )


def ce_mixture_gap(certificate: CeCertificate, game, counter=None, mode="auto", rng=None,
                   confidence=0.95, mc_samples=None, eps=None):
    """Swap-deviation report for the certificate's mixture (or its samples)."""
    eps = certificate.params.eps if eps is None else eps
    if certificate.strategies is not None:
        dist, rep = certificate.mixture(), "mixture"
    else:
        dist, rep = certificate.empirical(), "samples"
    return verify_ce(game, dist, eps=eps, mode=mode, rng=rng, counter=counter,
                     mc_samples=mc_samples, confidence=confidence, representation=rep)


class CESolver(BaseEstimator):
    """Estimator wrapper: ``fit(game)`` runs the solver, ``predict`` returns the certificate's distribution."""

    def __init__(self, eps=0.1, alpha=0.1, noise="exact", delta=None, overrides=None,
                 loss_estimate="sampled", random_state=None):
        self.eps = eps
        self.alpha = alpha
        self.noise = noise
        self.delta = delta
        self.overrides = overrides
        self.loss_estimate = loss_estimate
        self.random_state = random_state

    def fit(self, game, counter=None):
        self.certificate_ = solve_ce(game, self.eps, self.alpha, overrides=self.overrides,
                                     noise=self.noise, delta=self.delta,
                                     rng=self.random_state, counter=counter,
                                     loss_estimate=self.loss_estimate)
        self.game_ = game
        return self

    def predict(self, game=None):
        return self.certificate_.distribution()

    def score(self, game=None):
        """Negative worst swap gap, so larger is better."""
        report = ce_mixture_gap(self.certificate_, game or self.game_)
        return -report.max_gap
