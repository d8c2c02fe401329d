"""Input validation helpers shared by every module."""

from __future__ import annotations

import numbers

import numpy as np


class InputDomainError(ValueError):
    """An argument lies outside the domain an operation accepts."""


class InternalStateError(RuntimeError):
    """A solver was asked for state it has not produced yet."""


class InfeasibleParametersError(ValueError):
    """Formula-derived parameters are too large to run without an override."""


def check_rng(seed):
    """Turn ``None``, an int, a SeedSequence or a Generator into a Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    if seed is None or isinstance(seed, (numbers.Integral, np.random.SeedSequence)):
        return np.random.default_rng(seed)
    raise InputDomainError(f"cannot build a random generator from {seed!r}")


def check_positive_int(value, name, minimum=1):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise InputDomainError(f"{name} must be an integer, got {value!r}")
    if value < minimum:
        raise InputDomainError(f"{name} must be >= {minimum}, got {value}")
    return int(value)


def check_positive(value, name):
    value = float(value)
    if not np.isfinite(value) or value <= 0:
        raise InputDomainError(f"{name} must be a positive finite number, got {value}")
    return value


def check_alpha(alpha):
    alpha = float(alpha)
    if not 0.0 < alpha < 1.0:
        raise InputDomainError(f"alpha must lie in (0, 1), got {alpha}")
    return alpha


def check_delta(delta):
    delta = float(delta)
    if not 0.0 <= delta < 1.0:
        raise InputDomainError(f"delta must lie in [0, 1), got {delta}")
    return delta


def check_finite_vector(u, name="u"):
    u = np.asarray(u, dtype=np.float64)
    if u.ndim != 1 or u.size == 0:
        raise InputDomainError(f"{name} must be a non-empty 1-d vector")
    if not np.all(np.isfinite(u)):
        raise InputDomainError(f"{name} has non-finite entries")
    return u


def check_probability_vector(p, name="p", atol=1e-9):
    p = np.asarray(p, dtype=np.float64)
    if p.ndim != 1 or p.size == 0:
        raise InputDomainError(f"{name} must be a non-empty 1-d vector")
    if np.any(p < -atol) or not np.isfinite(p).all():
        raise InputDomainError(f"{name} has negative or non-finite entries")
    if abs(p.sum() - 1.0) > atol:
        raise InputDomainError(f"{name} sums to {p.sum()}, not 1")
    return p


def check_loss_matrix(losses, bound, name="losses", atol=1e-12):
    """Validate a (T, n) stream of loss vectors with entries in [0, bound]."""
    losses = np.asarray(losses, dtype=np.float64)
    if losses.ndim == 1:
        losses = losses[None, :]
    if losses.ndim != 2 or losses.shape[1] == 0:
        raise InputDomainError(f"{name} must have shape (T, n)")
    if not np.all(np.isfinite(losses)):
        raise InputDomainError(f"{name} has non-finite entries")
    if losses.size and (losses.min() < -atol or losses.max() > bound + atol):
        raise InputDomainError(f"{name} entries must lie in [0, {bound}]")
    return losses
