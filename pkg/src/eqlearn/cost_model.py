"""Closed-form query-cost expressions for classical and quantum equilibrium solvers.

Hidden constants are set to 1 and unspecified polylog factors are left out
of the number (they stay visible in ``formula_text``). Every logarithm is
natural and floored at 1, so small arguments cannot turn a cost into a
decreasing function of ``n``, ``m`` or ``B``. The classical CCE cost is the
exact query count of :func:`eqlearn.cce.solve_cce`, not an asymptotic.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, asdict

from ._validation import InputDomainError, check_alpha, check_positive, check_positive_int
from .mwu import cce_params

REGIMES = ("classical_ce", "classical_cce", "quantum_ce", "quantum_cce",
           "gibbs_single", "dynamic_gibbs")
CONSTANTS_POLICY = "leading-order, constant 1, ln for log, polylog factors expanded as written"

FORMULAS = {
    "classical_ce": "m * n * ln(mn)^(1/eps)",
    "classical_cce": "m * n * T,  T = ceil(max(64 B^2 ln n, 512 B^2 ln(4/alpha)) / eps^2)",
    "quantum_ce": "m * sqrt(n) * ln(1/alpha) * (ln(n) B / eps)^(B/eps) * poly(ln n, ln m, 1/eps, B)",
    "quantum_cce": "m * sqrt(n) * B^2.5 * eps^-2.5 * polylog(m, n, 1/eps, 1/alpha)",
    "gibbs_single": "beta * sqrt(n) * polylog(n, 1/delta)",
    "dynamic_gibbs": ("1 + sqrt(n) * T * eta' * ln^4(n/delta) * (sqrt(eta' L) + eta' L),  "
                      "eta' = eta * B, L = ln(n eta' T / alpha);  "
                      "opponent term ln^1(n2), n2 = n^(m-1)"),
}

# Exponents of (m, n, eps) in each leading term where they are pure powers.
EXPONENTS = {
    "classical_cce": {"m": 1.0, "n": 1.0, "eps": -2.0},
    "quantum_cce": {"m": 1.0, "n": 0.5, "eps": -2.5},
    "gibbs_single": {"n": 0.5},
}


def _ln(x):
    return max(1.0, math.log(x))


@dataclass
class CostEstimate:
    regime: str
    leading_term: float
    formula_text: str
    params: dict
    constants_policy: str = CONSTANTS_POLICY

    def to_dict(self):
        return asdict(self)


def estimate(regime, m, n, eps, B=1.0, alpha=0.1, beta=None, delta=None) -> CostEstimate:
    """Evaluate one regime's cost expression.

    ``beta`` is the amplitude-encoding norm bound for ``gibbs_single``
    (defaults to ``B``); ``delta`` is the sampler accuracy for
    ``dynamic_gibbs`` (defaults to ``eps / (16 B (n - 1))``).
    """
    if regime not in REGIMES:
        raise InputDomainError(f"unknown regime {regime!r}; choose from {REGIMES}")
    m = check_positive_int(m, "m")
    n = check_positive_int(n, "n")
    eps = check_positive(eps, "eps")
    B = check_positive(B, "B")
    alpha = check_alpha(alpha)
    if eps >= B and regime != "classical_cce":
        raise InputDomainError(f"eps must be below B (got eps={eps}, B={B})")
    params = {"m": m, "n": n, "eps": eps, "B": B, "alpha": alpha}

    if regime == "classical_cce":
        value = m * n * cce_params(eps, B, n, alpha).T
    elif regime == "classical_ce":
        value = m * n * _ln(m * n) ** (1.0 / eps)
    elif regime == "quantum_ce":
        value = m * math.sqrt(n) * _ln(1.0 / alpha) * (_ln(n) * B / eps) ** (B / eps)
    elif regime == "quantum_cce":
        value = m * math.sqrt(n) * B**2.5 * eps**-2.5
    elif regime == "gibbs_single":
        beta = B if beta is None else check_positive(beta, "beta")
        params["beta"] = beta
        value = beta * math.sqrt(n)
    else:
        p = cce_params(eps, B, max(n, 2), alpha)
        d = delta if delta is not None else (p.delta if n > 1 else eps / (16.0 * B))
        d = check_positive(d, "delta")
        params["delta"] = d
        # The sampler is stated for losses in [0, 1]; with losses in [0, B]
        # it runs on L / B with step eta * B.
        eta = p.eta * B
        L = _ln(n * eta * p.T / alpha)
        value = 1.0 + math.sqrt(n) * p.T * eta * _ln(n / d) ** 4 * (
            math.sqrt(eta * L) + eta * L)
    return CostEstimate(regime=regime, leading_term=value, formula_text=FORMULAS[regime],
                        params=params)


def dynamic_gibbs_opponent_factor(n, m):
    """Opponent-space log factor of the dynamic sampler, ``ln(n2)`` with ``n2 = n^(m-1)``.

    The corrected power is 1 (not 4): the sampler tree is queried
    ``O(log n2)`` times per encoding.
    """
    return _ln(float(n) ** (m - 1))


def compare(measured, est: CostEstimate) -> dict:
    """Measured-to-predicted ratio report."""
    measured = float(measured)
    return {"regime": est.regime, "measured": measured, "predicted": est.leading_term,
            "ratio": measured / est.leading_term, "label": "model vs. measurement"}


def ratio_exponents(num="quantum_cce", den="classical_cce"):
    """Symbolic exponents of ``num / den`` in ``(m, n, eps)``."""
    a, b = EXPONENTS[num], EXPONENTS[den]
    return {k: a.get(k, 0.0) - b.get(k, 0.0) for k in sorted(set(a) | set(b))}


TABLE_FIELDS = ("kind", "setting", "regime", "m", "n", "eps", "B", "alpha", "queries", "formula")


def complexity_table(m, n, eps, B=1.0, alpha=0.1):
    """Rows comparing classical and quantum costs for CE and CCE."""
    rows = []
    for kind, setting, regime in (("CE", "classical", "classical_ce"),
                                  ("CE", "quantum", "quantum_ce"),
                                  ("CCE", "classical", "classical_cce"),
                                  ("CCE", "quantum", "quantum_cce")):
        e = estimate(regime, m, n, eps, B, alpha)
        rows.append({"kind": kind, "setting": setting, "regime": regime, "m": m, "n": n,
                     "eps": eps, "B": B, "alpha": alpha, "queries": e.leading_term,
                     "formula": e.formula_text})
    return rows


def table_to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=TABLE_FIELDS, lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()


def table_to_json(rows, **kw) -> str:
    return json.dumps(rows, **kw)
