"""Search-to-equilibrium reduction harness on hard instances.

Each trial plants a fresh secret target ``k_i`` per player, runs a solver,
draws one action per player from the returned marginals and succeeds when
every draw hits its target. Any ``eps``-equilibrium found with probability
``1 - alpha`` decodes all targets with probability at least
``1 - (alpha + eps * m / B)``.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field, asdict

import numpy as np
from scipy.stats import norm

from ._validation import InputDomainError, check_alpha, check_positive, check_positive_int
from .cce import solve_cce
from .ce import solve_ce
from .games import QueryCounter, make_hard_instance

SOLVERS = ("cce", "ce")
CSV_FIELDS = ("m", "n", "eps", "trial", "success", "queries")


def success_floor(alpha, eps, m, B):
    """Lower bound ``1 - (alpha + eps * m / B)`` on the decoding success rate."""
    return 1.0 - (alpha + eps * m / B)


def binomial_half_width(p, trials, confidence=0.95):
    """Normal-approximation half-width of a binomial proportion at ``p``."""
    z = norm.ppf(0.5 + confidence / 2.0)
    return float(z * math.sqrt(max(p * (1.0 - p), 0.0) / trials))


def hypothesis_holds(eps, m, B):
    """Admissible accuracy range ``eps < min(1/3, 2B/(3m))`` for the lower bound."""
    return eps < min(1.0 / 3.0, 2.0 * B / (3.0 * m))


@dataclass
class ReductionReport:
    solver: str
    m: int
    n: int
    B: float
    eps: float
    alpha: float
    seed: object
    trials: int
    successes: int
    per_trial_queries: list
    per_trial_success: list = field(default_factory=list)
    overrides: dict = field(default_factory=dict)

    @property
    def success_rate(self) -> float:
        return self.successes / self.trials

    @property
    def floor(self) -> float:
        return success_floor(self.alpha, self.eps, self.m, self.B)

    def ci_half_width(self, confidence=0.95) -> float:
        return binomial_half_width(min(max(self.floor, 0.0), 1.0), self.trials, confidence)

    @property
    def passes(self) -> bool:
        return self.success_rate >= self.floor - self.ci_half_width()

    def to_dict(self):
        d = asdict(self)
        d.update(success_rate=self.success_rate, floor=self.floor,
                 ci_half_width=self.ci_half_width(), passes=self.passes)
        return d

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)

    def csv_rows(self):
        for t, (ok, q) in enumerate(zip(self.per_trial_success, self.per_trial_queries)):
            yield {"m": self.m, "n": self.n, "eps": self.eps, "trial": t,
                   "success": int(ok), "queries": q}


def reports_to_csv(reports) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
    w.writeheader()
    for r in reports:
        w.writerows(r.csv_rows())
    return buf.getvalue()


def _solve_marginals(solver, game, eps, alpha, overrides, rng, counter, noise):
    if solver == "cce":
        res = solve_cce(game, eps, alpha, overrides=overrides, noise=noise, rng=rng,
                        counter=counter)
        return res.marginals
    cert = solve_ce(game, eps, alpha, overrides=overrides, noise=noise, rng=rng,
                    counter=counter)
    return np.stack([cert.marginal(i) for i in range(game.players)])


def run_reduction(solver, m, n, B=1.0, eps=0.1, trials=20, seed=0, alpha=None,
                  overrides=None, noise="exact", check_hypothesis=True) -> ReductionReport:
    """Run ``trials`` independent solve-and-decode trials on fresh hard instances.

    ``alpha`` defaults to ``1/3``. Each trial gets its own child seed spawned
    from ``seed``, used for the targets, the solver and the decoding draw.
    """
    if solver not in SOLVERS:
        raise InputDomainError(f"solver must be one of {SOLVERS}, got {solver!r}")
    m = check_positive_int(m, "m")
    n = check_positive_int(n, "n")
    B = check_positive(B, "B")
    eps = check_positive(eps, "eps")
    trials = check_positive_int(trials, "trials")
    alpha = check_alpha(1.0 / 3.0 if alpha is None else alpha)
    if check_hypothesis and not hypothesis_holds(eps, m, B):
        raise InputDomainError(
            f"eps={eps} violates eps < min(1/3, 2B/(3m)) = {min(1/3, 2*B/(3*m)):.4g}; "
            "pass check_hypothesis=False for exploratory runs"
        )
    children = np.random.SeedSequence(seed).spawn(trials)
    queries, wins = [], []
    for t, child in enumerate(children):
        rng = np.random.default_rng(child)
        game = make_hard_instance(m, n, loss_bound=B, seed=rng)
        counter = QueryCounter()
        try:
            marg = _solve_marginals(solver, game, eps, alpha, overrides, rng, counter, noise)
        except Exception as exc:
            raise RuntimeError(f"solver failed in trial {t}: {exc}") from exc
        draw = np.array([rng.choice(n, p=marg[i] / marg[i].sum()) for i in range(m)])
        wins.append(bool(np.all(draw == game.targets)))
        queries.append(int(counter.count))
    return ReductionReport(
        solver=solver, m=m, n=n, B=B, eps=eps, alpha=alpha, seed=seed, trials=trials,
        successes=int(sum(wins)), per_trial_queries=queries, per_trial_success=wins,
        overrides=dict(overrides or {}),
    )


@dataclass
class ScalingFit:
    alpha_m: float
    alpha_n: float
    log_c: float
    r2: float
    residuals: list

    def to_dict(self):
        return asdict(self)


def scaling_fit(ms, ns, queries) -> ScalingFit:
    """Least-squares fit of ``log q = c + alpha_m log m + alpha_n log n``.

    Needs at least three distinct values on each axis.
    """
    ms = np.asarray(ms, dtype=np.float64)
    ns = np.asarray(ns, dtype=np.float64)
    q = np.asarray(queries, dtype=np.float64)
    if not (ms.shape == ns.shape == q.shape) or ms.ndim != 1:
        raise InputDomainError("ms, ns and queries must be equal-length vectors")
    if len(np.unique(ms)) < 3 or len(np.unique(ns)) < 3:
        raise InputDomainError("degenerate grid: need at least 3 distinct values per axis")
    if np.any(q <= 0) or np.any(ms <= 0) or np.any(ns <= 0):
        raise InputDomainError("grid values and query counts must be positive")
    X = np.column_stack([np.ones_like(ms), np.log(ms), np.log(ns)])
    y = np.log(q)
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = y - X @ coef
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(resid @ resid) / ss_tot if ss_tot > 0 else 1.0
    return ScalingFit(alpha_m=float(coef[1]), alpha_n=float(coef[2]), log_c=float(coef[0]),
                      r2=r2, residuals=resid.tolist())


def bench_grid(ms=(2, 4, 8), ns=(4, 16, 64), eps=0.9, alpha=0.5, B=1.0, seed=0):
    """Measured classical CCE query counts on hard instances over an ``(m, n)`` grid.

    Returns a list of dicts with the measured count and the closed-form
    ``m * n * T`` prediction.
    """
    from .cost_model import estimate

    rows = []
    for m in ms:
        for n in ns:
            game = make_hard_instance(m, n, loss_bound=B, seed=seed)
            counter = QueryCounter()
            res = solve_cce(game, eps, alpha, rng=seed, counter=counter)
            pred = estimate("classical_cce", m, n, eps, B, alpha).leading_term
            rows.append({"m": m, "n": n, "eps": eps, "T": res.params.T,
                         "measured": counter.count, "predicted": pred,
                         "ratio": counter.count / pred})
    return rows
