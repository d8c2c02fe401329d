"""Joint distributions over action profiles.

Three representations cover every object the solvers emit:

* :class:`SparseJoint`: explicit support with probabilities (empirical play,
  hand-written distributions).
* :class:`ProductJoint`: independent marginals, never expanded beyond a cap.
* :class:`MixtureOfProducts`: weighted average of product distributions (the
  per-round factors of the multi-scale solver).
"""

from __future__ import annotations

import json

import numpy as np

from ._validation import InputDomainError, check_rng
from .gibbs import inverse_cdf

DIST_FORMATS = {
    "joint-sparse-v1": ["format", "players", "actions", "profiles", "probs"],
    "joint-product-v1": ["format", "players", "actions", "marginals"],
    "joint-mixture-v1": ["format", "players", "actions", "weights", "factors"],
}

_ATOL = 1e-9


def _check_simplex_rows(P, what):
    if np.any(P < -_ATOL) or not np.all(np.isfinite(P)):
        raise InputDomainError(f"{what} has negative or non-finite entries")
    sums = P.sum(axis=-1)
    if np.any(np.abs(sums - 1.0) > 1e-6):
        raise InputDomainError(f"{what} rows must sum to 1")
    return np.clip(P, 0.0, None) / P.sum(axis=-1, keepdims=True).clip(min=1e-300)


class SparseJoint:
    """Finite-support distribution; duplicate profiles are merged."""

    def __init__(self, profiles, probs, actions):
        prof = np.asarray(profiles, dtype=np.int64)
        if prof.ndim != 2 or prof.shape[0] == 0:
            raise InputDomainError("profiles must be a non-empty (N, m) array")
        p = np.asarray(probs, dtype=np.float64)
        if p.shape != (prof.shape[0],):
            raise InputDomainError("probs must have one entry per profile")
        self.players = prof.shape[1]
        self.actions = int(actions)
        if prof.min() < 0 or prof.max() >= self.actions:
            raise InputDomainError(f"profile entries must lie in [0, {self.actions})")
        p = _check_simplex_rows(p[None, :], "probs")[0]
        uniq, inv = np.unique(prof, axis=0, return_inverse=True)
        merged = np.zeros(len(uniq))
        np.add.at(merged, inv.reshape(-1), p)
        keep = merged > 0
        self.profiles = uniq[keep]
        self.probs = merged[keep]

    @classmethod
    def from_samples(cls, samples, actions):
        samples = np.asarray(samples, dtype=np.int64)
        uniq, counts = np.unique(samples, axis=0, return_counts=True)
        return cls(uniq, counts / counts.sum(), actions)

    @classmethod
    def point_mass(cls, profile, actions):
        return cls([list(profile)], [1.0], actions)

    @property
    def support_size(self):
        return len(self.probs)

    def marginal(self, player):
        out = np.zeros(self.actions)
        np.add.at(out, self.profiles[:, player], self.probs)
        return out

    def sample(self, size, rng=None):
        rng = check_rng(rng)
        idx = inverse_cdf(self.probs, rng.random(size))
        return self.profiles[idx]

    def to_dict(self):
        return {"format": "joint-sparse-v1", "players": self.players,
                "actions": self.actions, "profiles": self.profiles.tolist(),
                "probs": self.probs.tolist()}


class MixtureOfProducts:
    """``sum_c w_c * (x_{c,1} x ... x x_{c,m})`` with factors of shape ``(C, m, n)``."""

    def __init__(self, weights, factors):
        f = np.asarray(factors, dtype=np.float64)
        if f.ndim != 3 or f.shape[0] == 0:
            raise InputDomainError("factors must have shape (C, m, n)")
        w = np.asarray(weights, dtype=np.float64)
        if w.shape != (f.shape[0],):
            raise InputDomainError("one weight per mixture component is required")
        self.weights = _check_simplex_rows(w[None, :], "weights")[0]
        self.factors = _check_simplex_rows(f, "factors")
        self.players = f.shape[1]
        self.actions = f.shape[2]

    @property
    def components(self):
        return len(self.weights)

    def marginal(self, player):
        return self.weights @ self.factors[:, player, :]

    def sample(self, size, rng=None):
        rng = check_rng(rng)
        comp = inverse_cdf(self.weights, rng.random(size))
        u = rng.random((size, self.players))
        cdf = np.cumsum(self.factors[comp], axis=-1)  # (size, m, n)
        idx = (u[..., None] * cdf[..., -1:] >= cdf).sum(axis=-1)
        return np.minimum(idx, self.actions - 1)

    def to_sparse(self, max_support=10**6):
        n, m = self.actions, self.players
        if n**m > max_support:
            raise InputDomainError(f"refusing to expand {n}^{m} profiles")
        grids = np.indices((n,) * m).reshape(m, -1).T
        probs = np.zeros(len(grids))
        for w, f in zip(self.weights, self.factors):
            probs += w * np.prod(f[np.arange(m), grids], axis=1)
        return SparseJoint(grids, probs / probs.sum(), n)

    def to_dict(self):
        return {"format": "joint-mixture-v1", "players": self.players,
                "actions": self.actions, "weights": self.weights.tolist(),
                "factors": self.factors.tolist()}


class ProductJoint(MixtureOfProducts):
    """Independent marginals, one per player."""

    def __init__(self, marginals):
        super().__init__([1.0], np.asarray(marginals, dtype=np.float64)[None, :, :])

    @property
    def marginals(self):
        return self.factors[0]

    def to_dict(self):
        return {"format": "joint-product-v1", "players": self.players,
                "actions": self.actions, "marginals": self.marginals.tolist()}


def dist_from_dict(d):
    if not isinstance(d, dict) or d.get("format") not in DIST_FORMATS:
        raise InputDomainError(
            f"unsupported distribution representation {d.get('format') if isinstance(d, dict) else d!r}"
        )
    missing = [k for k in DIST_FORMATS[d["format"]] if k not in d]
    if missing:
        raise InputDomainError(f"distribution JSON is missing field(s): {', '.join(missing)}")
    fmt = d["format"]
    if fmt == "joint-sparse-v1":
        dist = SparseJoint(d["profiles"], d["probs"], d["actions"])
    elif fmt == "joint-product-v1":
        dist = ProductJoint(d["marginals"])
    else:
        dist = MixtureOfProducts(d["weights"], d["factors"])
    if dist.players != d["players"] or dist.actions != d["actions"]:
        raise InputDomainError("declared players/actions do not match the distribution body")
    return dist


def load_dist(path):
    with open(path) as fh:
        return dist_from_dict(json.load(fh))
