"""Regret functionals and exact / Monte-Carlo equilibrium verifiers.

Both verifiers reduce to per-player deviation gains. For a CE the swap
function is optimised independently per recommended action, which is exact
because the objective separates over source actions; a CCE only allows
constant deviations.
"""

from __future__ import annotations

import csv
import io
import json
import math
import string
from dataclasses import dataclass, field, asdict

import numpy as np

from ._validation import InputDomainError, check_rng
from .distributions import MixtureOfProducts, SparseJoint
from .games import QueryCounter

EXACT_TERM_LIMIT = 10**7
_TIE_TOL = 1e-12


# -- regret -----------------------------------------------------------------------------

def _check_stream(strategies, losses):
    x = np.atleast_2d(np.asarray(strategies, dtype=np.float64))
    ell = np.atleast_2d(np.asarray(losses, dtype=np.float64))
    if x.shape != ell.shape:
        raise InputDomainError(f"dimension mismatch: strategies {x.shape} vs losses {ell.shape}")
    return x, ell


def external_regret(strategies, losses) -> float:
    """``sum_t <x_t, l_t> - min_j sum_t l_t(j)``."""
    x, ell = _check_stream(strategies, losses)
    return float(np.sum(x * ell) - ell.sum(axis=0).min())


def _best_replacements(G):
    """Row-wise best replacement for a gain matrix ``G[j, j']``.

    Keeps ``j`` itself when staying put is already optimal, otherwise the
    lowest-index maximiser.
    """
    best = G.max(axis=1)
    phi = np.argmax(G >= best[:, None] - _TIE_TOL, axis=1)
    stay = np.diag(G) >= best - _TIE_TOL
    phi[stay] = np.arange(G.shape[0])[stay]
    return best, phi


def swap_regret(strategies, losses):
    """Swap regret and a best swap map (list, ``map[j] = phi(j)``)."""
    x, ell = _check_stream(strategies, losses)
    # G[j, j'] = sum_t x_t(j) (l_t(j) - l_t(j'))
    own = np.sum(x * ell, axis=0)
    G = own[:, None] - x.T @ ell
    best, phi = _best_replacements(G)
    return float(best.sum()), phi.tolist()


# -- reports ------------------------------------------------------------------------------

@dataclass
class EquilibriumReport:
    kind: str
    eps: float
    per_player_gap: list
    worst_player: int
    worst_deviation: object
    verdict: bool
    method: dict
    queries_used: int
    representation: str = ""
    best_deviations: list = field(default_factory=list)
    raw_gaps: list = field(default_factory=list)

    @property
    def max_gap(self) -> float:
        return max(self.per_player_gap)

    def to_dict(self):
        d = asdict(self)
        d["max_gap"] = self.max_gap
        return d

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)

    CSV_FIELDS = ("kind", "representation", "eps", "max_gap", "worst_player",
                  "verdict", "method", "samples", "half_width", "queries_used")

    def csv_row(self) -> dict:
        return {
            "kind": self.kind,
            "representation": self.representation,
            "eps": self.eps,
            "max_gap": self.max_gap,
            "worst_player": self.worst_player,
            "verdict": int(self.verdict),
            "method": self.method["name"],
            "samples": self.method.get("samples", ""),
            "half_width": self.method.get("half_width", 0.0),
            "queries_used": self.queries_used,
        }


def reports_to_csv(reports) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=EquilibriumReport.CSV_FIELDS, lineterminator="\n")
    writer.writeheader()
    for r in reports:
        writer.writerow(r.csv_row())
    return buf.getvalue()


# -- expectation machinery -------------------------------------------------------------

def expectation_terms(dist) -> int:
    """Work estimate deciding between exact and Monte-Carlo verification."""
    if isinstance(dist, SparseJoint):
        return dist.support_size * dist.actions * dist.players
    if isinstance(dist, MixtureOfProducts):
        return dist.components * dist.actions ** (dist.players - 1)
    raise InputDomainError(f"unsupported distribution representation {type(dist).__name__}")


def _mixture_loss_vectors(table, factors, player):
    """Expected loss vectors ``E[L_i(., a_{-i})]`` under each product component."""
    m = factors.shape[1]
    letters = string.ascii_letters[: m + 1]
    comp, axes = letters[0], letters[1:]
    ops, subs = [table], [axes]
    for j in range(m):
        if j != player:
            ops.append(factors[:, j, :])
            subs.append(comp + axes[j])
    spec = ",".join(subs) + "->" + comp + axes[player]
    return np.einsum(spec, *ops, optimize=True)


def _gain_matrices(game, dist, counter):
    """Per player, ``G[j, j'] = E[1{a_i = j} (L_i(a) - L_i(j', a_{-i}))]``."""
    out = []
    if isinstance(dist, SparseJoint):
        onehot_rows = np.arange(dist.support_size)
        for i in range(game.players):
            L = game.loss_matrix(i, dist.profiles, counter)
            own = dist.profiles[:, i]
            realized = L[onehot_rows, own]
            W = np.zeros((dist.support_size, game.actions))
            W[onehot_rows, own] = dist.probs
            out.append(W.T @ (realized[:, None] - L))
    else:
        for i in range(game.players):
            table = game.loss_table(i, counter)
            ell = _mixture_loss_vectors(table, dist.factors, i)  # (C, n)
            x = dist.factors[:, i, :]
            wx = dist.weights[:, None] * x  # (C, n)
            own = np.sum(wx * ell, axis=0)  # E[1{a_i=j} L_i(a)]
            out.append(own[:, None] - wx.T @ ell)
    return out


def _check_compatible(game, dist):
    if dist.players != game.players or dist.actions != game.actions:
        raise InputDomainError(
            f"distribution over {dist.players} players x {dist.actions} actions does not "
            f"match the game ({game.players} x {game.actions})"
        )


def hoeffding_half_width(samples, loss_bound, players, log_deviations, confidence):
    """Uniform half-width over ``players * |deviations|`` gains bounded in ``[-B, B]``."""
    fail = 1.0 - confidence
    return loss_bound * math.sqrt(
        2.0 * (math.log(2.0 * players / fail) + log_deviations) / samples
    )


def hoeffding_samples(eps, loss_bound, players, log_deviations, confidence):
    """Smallest sample count whose half-width is at most ``eps / 4``."""
    fail = 1.0 - confidence
    target = eps / 4.0
    return max(1, math.ceil(
        2.0 * loss_bound**2 * (math.log(2.0 * players / fail) + log_deviations) / target**2
    ))


def _verify(kind, game, dist, eps, mode, rng, counter, mc_samples, confidence,
            representation):
    _check_compatible(game, dist)
    if eps < 0:
        raise InputDomainError("eps must be nonnegative")
    if mode not in ("exact", "mc", "auto"):
        raise InputDomainError(f"unknown verification mode {mode!r}")
    if counter is None:
        counter = QueryCounter()
    start = counter.count
    n = game.actions
    log_dev = n * math.log(n) if kind == "CE" else math.log(n)
    terms = expectation_terms(dist)
    if mode == "auto":
        mode = "exact" if terms <= EXACT_TERM_LIMIT else "mc"
    if mode == "exact":
        if terms > EXACT_TERM_LIMIT:
            raise InputDomainError(
                f"exact verification needs {terms} expectation terms (limit {EXACT_TERM_LIMIT}); "
                "use Monte-Carlo mode"
            )
        target = dist
        half_width = 0.0
        method = {"name": "exact"}
    else:
        if not 0.0 < confidence < 1.0:
            raise InputDomainError("confidence must lie in (0, 1)")
        if mc_samples is None:
            if eps <= 0:
                raise InputDomainError("Monte-Carlo mode with eps = 0 needs an explicit sample count")
            mc_samples = hoeffding_samples(eps, game.loss_bound, game.players, log_dev, confidence)
        rng = check_rng(rng)
        draws = dist.sample(int(mc_samples), rng)
        target = SparseJoint.from_samples(draws, game.actions)
        half_width = hoeffding_half_width(mc_samples, game.loss_bound, game.players,
                                          log_dev, confidence)
        method = {"name": "monte_carlo", "samples": int(mc_samples),
                  "confidence": confidence, "half_width": half_width}

    gains = _gain_matrices(game, target, counter)
    gaps, raw, devs = [], [], []
    for G in gains:
        if kind == "CE":
            best, phi = _best_replacements(G)
            raw.append(float(best.sum()))
            devs.append(phi.tolist())
        else:
            col = G.sum(axis=0)  # E[L_i(a)] - E[L_i(j', a_{-i})]
            j = int(np.argmax(col >= col.max() - _TIE_TOL))
            raw.append(float(col[j]))
            devs.append(j)
        # Following the recommendation is always an option, so the gap is the
        # best reduction in loss and never negative; correlated play can make
        # every fixed deviation strictly worse.
        gaps.append(max(0.0, raw[-1]))
    worst = int(np.argmax(gaps))
    return EquilibriumReport(
        kind=kind,
        eps=float(eps),
        per_player_gap=gaps,
        worst_player=worst,
        worst_deviation=devs[worst],
        verdict=bool(max(gaps) <= eps + half_width),
        method=method,
        queries_used=counter.count - start,
        representation=representation or type(dist).__name__,
        best_deviations=devs,
        raw_gaps=raw,
    )


def verify_cce(game, dist, eps=0.0, mode="auto", rng=None, counter=None,
               mc_samples=None, confidence=0.95, representation=""):
    """Check the coarse correlated equilibrium condition for every player.

    ``gap_i = max(0, E[L_i(a)] - min_{a'} E[L_i(a', a_{-i})])``; the verdict holds when
    every gap is at most ``eps`` (plus the Hoeffding half-width in
    Monte-Carlo mode).
    """
    return _verify("CCE", game, dist, eps, mode, rng, counter, mc_samples,
                   confidence, representation)


def verify_ce(game, dist, eps=0.0, mode="auto", rng=None, counter=None,
              mc_samples=None, confidence=0.95, representation=""):
    """Check the correlated equilibrium condition for every player and swap map."""
    return _verify("CE", game, dist, eps, mode, rng, counter, mc_samples,
                   confidence, representation)
