"""Gibbs distributions ``exp(-u) / ||exp(-u)||_1`` and a TV-bounded noise layer.

The noisy modes stand in for an approximate sampler that is only promised to
be within total-variation distance ``delta`` of the exact law:

``uniform_mix``
    ``(1 - delta) * p + delta * uniform``.
``argmax_shift``
    moves ``min(delta, max(p))`` mass from the largest entry of ``p`` to its
    smallest entry (ties go to the lowest index).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._validation import (
    InputDomainError,
    check_delta,
    check_finite_vector,
)

NOISE_MODES = ("exact", "uniform_mix", "argmax_shift")


def normalize_noise_mode(mode: str) -> str:
    """Accept CLI spellings (``uniform-mix``) as well as identifiers."""
    key = str(mode).replace("-", "_").lower()
    if key not in NOISE_MODES:
        raise InputDomainError(f"unknown noise mode {mode!r}; expected one of {NOISE_MODES}")
    return key


@dataclass(frozen=True)
class GibbsSpec:
    """Weights ``u`` of a Gibbs law together with the noise applied on sampling."""

    u: np.ndarray
    noise_mode: str = "exact"
    delta: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "u", check_finite_vector(self.u))
        object.__setattr__(self, "noise_mode", normalize_noise_mode(self.noise_mode))
        object.__setattr__(self, "delta", check_delta(self.delta))

    @property
    def n(self) -> int:
        return self.u.size

    def exact_law(self) -> np.ndarray:
        return gibbs_distribution(self.u)

    def law(self) -> np.ndarray:
        """The distribution samples are actually drawn from."""
        return perturb(self.exact_law(), self.noise_mode, self.delta)


def gibbs_distribution(u) -> np.ndarray:
    """Softmax of ``-u`` with max-subtraction, renormalised onto the simplex."""
    u = check_finite_vector(u)
    z = -(u - u.min())
    w = np.exp(z)
    p = w / w.sum()
    return p / p.sum()


def gibbs_rows(U) -> np.ndarray:
    """Row-wise :func:`gibbs_distribution` for a 2-d array of weights."""
    U = np.asarray(U, dtype=np.float64)
    if not np.all(np.isfinite(U)):
        raise InputDomainError("weights have non-finite entries")
    w = np.exp(-(U - U.min(axis=-1, keepdims=True)))
    p = w / w.sum(axis=-1, keepdims=True)
    return p / p.sum(axis=-1, keepdims=True)


def perturb(p, noise_mode="exact", delta=0.0) -> np.ndarray:
    """Apply a noise mode to an explicit probability vector.

    The result is always within total-variation distance ``delta`` of ``p``.
    """
    mode = normalize_noise_mode(noise_mode)
    delta = check_delta(delta)
    p = np.asarray(p, dtype=np.float64)
    if mode == "exact" or delta == 0.0:
        return p.copy()
    if mode == "uniform_mix":
        return (1.0 - delta) * p + delta / p.size
    q = p.copy()
    hi = int(np.argmax(q))
    lo = int(np.argmin(q))
    if hi != lo:
        shift = min(delta, q[hi])
        q[hi] -= shift
        q[lo] += shift
    return q


def perturb_rows(P, noise_mode="exact", delta=0.0) -> np.ndarray:
    """Row-wise :func:`perturb` for a 2-d array of distributions."""
    mode = normalize_noise_mode(noise_mode)
    delta = check_delta(delta)
    P = np.array(P, dtype=np.float64)
    if mode == "exact" or delta == 0.0:
        return P
    if mode == "uniform_mix":
        return (1.0 - delta) * P + delta / P.shape[-1]
    rows = np.arange(P.shape[0])
    hi = np.argmax(P, axis=1)
    lo = np.argmin(P, axis=1)
    shift = np.where(hi != lo, np.minimum(delta, P[rows, hi]), 0.0)
    P[rows, hi] -= shift
    P[rows, lo] += shift
    return P


def inverse_cdf(p, uniforms) -> np.ndarray:
    """Map uniforms in ``[0, 1)`` to indices of ``p`` by inverse-CDF lookup."""
    cdf = np.cumsum(p)
    idx = np.searchsorted(cdf, np.asarray(uniforms) * cdf[-1], side="right")
    return np.minimum(idx, len(p) - 1)


def sample_gibbs(spec: GibbsSpec, rng, size=None):
    """Draw from ``spec.law()``; one uniform per draw, so results depend only on rng state."""
    law = spec.law()
    u = rng.random(size)
    idx = inverse_cdf(law, np.atleast_1d(u))
    if size is None:
        return int(idx[0])
    return idx


def tv_distance(p, q) -> float:
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape or p.ndim != 1:
        raise InputDomainError(f"length mismatch: {p.shape} vs {q.shape}")
    return 0.5 * float(np.abs(p - q).sum())
