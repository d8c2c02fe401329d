"""Multiplicative weights, the multi-scale interval scheduler, and solver parameters.

Every ``log`` in a rate or bound is the natural logarithm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict

import numpy as np
from sklearn.base import BaseEstimator

from ._validation import (
    InfeasibleParametersError,
    InputDomainError,
    check_alpha,
    check_loss_matrix,
    check_positive,
    check_positive_int,
)
from .gibbs import gibbs_distribution, gibbs_rows
from .verify import external_regret


def mwu_step_size(n, T, loss_bound):
    """``sqrt(ln n / T) / B``; dividing by ``B`` keeps the regret bound valid for ``B != 1``."""
    return math.sqrt(math.log(n) / T) / loss_bound


def mwu_regret_bound(n, T, loss_bound):
    return 2.0 * loss_bound * math.sqrt(T * math.log(n))


@dataclass
class MwuState:
    cumulative_loss: np.ndarray
    eta: float
    rounds_seen: int = 0

    @classmethod
    def initial(cls, n, eta):
        return cls(np.zeros(n), float(eta), 0)

    def update(self, loss):
        self.cumulative_loss = self.cumulative_loss + np.asarray(loss, dtype=np.float64)
        self.rounds_seen += 1


def mwu_strategy(state: MwuState) -> np.ndarray:
    return gibbs_distribution(state.eta * state.cumulative_loss)


def mwu_run(losses, loss_bound=1.0, T=None):
    """Run MWU against a fixed stream of ``T`` loss vectors.

    Returns
    -------
    strategies : ndarray of shape (T, n)
        The strategy played in each round, before observing that round's loss.
    regret : float
        External regret of the played strategies.
    """
    loss_bound = check_positive(loss_bound, "loss_bound")
    losses = check_loss_matrix(losses, loss_bound)
    if T is not None and T != losses.shape[0]:
        raise InputDomainError(f"expected {T} loss vectors, got {losses.shape[0]}")
    T, n = losses.shape
    eta = mwu_step_size(n, T, loss_bound)
    # Prefix sums of losses before each round.
    before = np.vstack([np.zeros(n), np.cumsum(losses, axis=0)[:-1]])
    strategies = gibbs_rows(eta * before)
    return strategies, external_regret(strategies, losses)


class MultiplicativeWeights(BaseEstimator):
    """Online MWU learner with a fit / partial_fit / predict_proba interface.

    Parameters
    ----------
    n_actions : int
    horizon : int
        Number of rounds ``T`` the step size is tuned for.
    loss_bound : float
        Upper bound ``B`` on every loss entry.
    eta : float, optional
        Explicit step size; defaults to ``sqrt(ln n / T) / B``.
    """

    def __init__(self, n_actions=2, horizon=1, loss_bound=1.0, eta=None):
        self.n_actions = n_actions
        self.horizon = horizon
        self.loss_bound = loss_bound
        self.eta = eta

    def _init_state(self):
        n = check_positive_int(self.n_actions, "n_actions")
        T = check_positive_int(self.horizon, "horizon")
        eta = self.eta if self.eta is not None else mwu_step_size(n, T, self.loss_bound)
        self.state_ = MwuState.initial(n, eta)
        self.strategies_ = []
        self.losses_ = []

    def partial_fit(self, loss):
        if not hasattr(self, "state_"):
            self._init_state()
        loss = check_loss_matrix(loss, self.loss_bound)[0]
        if loss.size != self.state_.cumulative_loss.size:
            raise InputDomainError("loss vector length does not match n_actions")
        self.strategies_.append(self.predict_proba())
        self.losses_.append(loss)
        self.state_.update(loss)
        return self

    def fit(self, losses):
        self._init_state()
        for row in check_loss_matrix(losses, self.loss_bound):
            self.partial_fit(row)
        return self

    def predict_proba(self):
        if not hasattr(self, "state_"):
            self._init_state()
        return mwu_strategy(self.state_)

    def regret(self):
        if not self.losses_:
            return 0.0
        return external_regret(np.array(self.strategies_), np.array(self.losses_))


# -- multi-scale scheduling ---------------------------------------------------------

@dataclass(frozen=True)
class IntervalCoords:
    """Block index ``r`` (1-based) and completed sub-blocks ``h`` for one scale."""

    r: int
    h: int
    start: int  # first round of the aggregation window
    stop: int   # last round of the window; ``stop < start`` when empty

    @property
    def empty(self) -> bool:
        return self.h == 0


def ms_schedule(t, k, H) -> IntervalCoords:
    """Aggregation window of scale ``k`` when choosing the strategy for round ``t``.

    ``r = ceil(t / H**k)`` picks the block of length ``H**k`` holding ``t``;
    ``h`` counts the sub-blocks of length ``H**(k-1)`` that finished strictly
    before ``t``, so the window only covers rounds already played.
    """
    t = check_positive_int(t, "t")
    k = check_positive_int(k, "k")
    H = check_positive_int(H, "H")
    block = H**k
    sub = H ** (k - 1)
    r = -(-t // block)
    offset = (r - 1) * block
    h = (t - 1 - offset) // sub
    return IntervalCoords(r=r, h=h, start=offset + 1, stop=offset + h * sub)


def ms_mwu_strategy(windowed_losses, H, n=None):
    """Mixture strategy from per-scale windowed loss sums.

    ``windowed_losses`` has shape ``(2**K, n)``; row ``k-1`` holds the window
    sum for scale ``k`` (all zeros for an empty window, which yields the
    uniform strategy). Returns ``(p, q)`` with ``q[k-1] = gibbs(sqrt(ln n / H)
    * windowed_losses[k-1])`` and ``p`` their uniform mixture.
    """
    L = np.atleast_2d(np.asarray(windowed_losses, dtype=np.float64))
    if n is not None and L.shape[1] != n:
        raise InputDomainError("windowed loss length does not match n")
    n = L.shape[1]
    H = check_positive_int(H, "H")
    rate = math.sqrt(math.log(n) / H) if n > 1 else 0.0
    q = gibbs_rows(rate * L)
    return q.mean(axis=0), q


# -- parameters -----------------------------------------------------------------------

@dataclass
class MsParams:
    """Internal parameters of the sample-based multi-scale MWU solver."""

    K: int
    H: int
    T: int
    S: int
    delta: float
    eps: float
    B: float
    n: int
    m: int
    alpha: float
    overrides: dict = field(default_factory=dict)

    @property
    def paper_scale(self) -> bool:
        return not self.overrides

    @property
    def scales(self) -> int:
        return 2**self.K

    @property
    def rate(self) -> float:
        return math.sqrt(math.log(self.n) / self.H) if self.n > 1 else 0.0

    def to_dict(self):
        d = asdict(self)
        d["paper_scale"] = self.paper_scale
        return d


def _formula_K(eps, B):
    return max(0, math.ceil(math.log2(3.0 * B / eps) + 1.0))


def _formula_H(n, K):
    return max(1, math.ceil(4.0 * math.log(n) * 2 ** (2 * K)))


def _formula_S(eps, B, m, n, T, alpha):
    return max(1, math.ceil(18.0 * B * B / (eps * eps) * math.log(2.0 * m * n * T / alpha)))


def ms_params(eps, B, n, m, alpha, overrides=None) -> MsParams:
    """Derive ``K, H, T, S, delta``; any of ``K, H, T, S, delta`` may be overridden.

    Raises
    ------
    InfeasibleParametersError
        When ``T = H**(2**K)`` exceeds the int64 range and no override for
        ``T`` (or smaller ``K``/``H``) is supplied.
    """
    eps = check_positive(eps, "eps")
    B = check_positive(B, "B")
    n = check_positive_int(n, "n")
    m = check_positive_int(m, "m")
    alpha = check_alpha(alpha)
    overrides = {k: v for k, v in (overrides or {}).items() if v is not None}
    unknown = set(overrides) - {"K", "H", "T", "S", "delta"}
    if unknown:
        raise InputDomainError(f"unknown override(s): {sorted(unknown)}")

    K = overrides.get("K", _formula_K(eps, B))
    K = check_positive_int(K, "K", minimum=0)
    H = check_positive_int(overrides.get("H", _formula_H(n, K)), "H")
    if "T" in overrides:
        T = check_positive_int(overrides["T"], "T")
    else:
        exponent = 2**K
        if H > 1 and exponent * math.log2(H) >= 63:
            raise InfeasibleParametersError(
                f"formula value T = H^(2^K) = {H}^{exponent} exceeds 2^63; "
                "pass an override for T (or smaller K/H) to run at desk scale"
            )
        T = H**exponent
    S = check_positive_int(overrides.get("S", _formula_S(eps, B, m, n, T, alpha)), "S")
    delta = float(overrides.get("delta", eps / (6.0 * B)))
    if not 0.0 <= delta < 1.0:
        raise InputDomainError(f"delta must lie in [0, 1), got {delta}")
    return MsParams(K=K, H=H, T=T, S=S, delta=delta, eps=eps, B=B, n=n, m=m,
                    alpha=alpha, overrides=dict(overrides))


@dataclass
class CceParams:
    T: int
    eta: float
    delta: float
    eps: float
    B: float
    n: int
    alpha: float
    overrides: dict = field(default_factory=dict)

    @property
    def paper_scale(self) -> bool:
        return not self.overrides

    def to_dict(self):
        d = asdict(self)
        d["paper_scale"] = self.paper_scale
        return d


def cce_params(eps, B, n, alpha, overrides=None) -> CceParams:
    """``T``, ``eta`` and ``delta`` of the sample-based MWU solver for CCE.

    For ``n = 1`` the noise level is undefined (it divides by ``n - 1``) and
    is reported as 0; the solver short-circuits that case.
    """
    eps = check_positive(eps, "eps")
    B = check_positive(B, "B")
    n = check_positive_int(n, "n")
    alpha = check_alpha(alpha)
    overrides = {k: v for k, v in (overrides or {}).items() if v is not None}
    unknown = set(overrides) - {"T", "delta"}
    if unknown:
        raise InputDomainError(f"unknown override(s): {sorted(unknown)}")
    if "T" in overrides:
        T = check_positive_int(overrides["T"], "T")
    else:
        T = math.ceil(max(64.0 * B * B * math.log(n) / eps**2,
                          512.0 * B * B * math.log(4.0 / alpha) / eps**2))
    eta = mwu_step_size(n, T, B) if n > 1 else 0.0
    if "delta" in overrides:
        delta = float(overrides["delta"])
    else:
        delta = eps / (16.0 * B * (n - 1)) if n > 1 else 0.0
    if not 0.0 <= delta < 1.0:
        raise InputDomainError(f"delta must lie in [0, 1), got {delta}")
    return CceParams(T=T, eta=eta, delta=delta, eps=eps, B=B, n=n, alpha=alpha,
                     overrides=dict(overrides))
