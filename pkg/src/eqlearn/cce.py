"""Sample-based MWU for coarse correlated equilibria.

Each round every player draws one action from the (optionally noisy) Gibbs
law over its step-scaled cumulative realized losses, then observes the full
loss vector ``L_i(., a_{-i})`` at the realized profile (``n`` queries). The
marginals ``x_hat_i`` are the empirical action frequencies. With the exact
sampler this is the classical ``O(mn/eps^2)``-query algorithm.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator

from ._validation import check_rng
from .distributions import ProductJoint, SparseJoint
from .games import QueryCounter
from .gibbs import gibbs_rows, normalize_noise_mode, perturb_rows
from .mwu import CceParams, cce_params
from .verify import verify_cce

CHUNK_ROUNDS = 1 << 16


@dataclass
class CceResult:
    counts: np.ndarray          # (m, n) action counts; marginals = counts / T
    joint_samples: np.ndarray   # (T, m) realized profiles
    params: CceParams
    query_count: int
    noise: dict
    seed: object = None
    cumulative_loss: np.ndarray = None  # (m, n) realized loss sums after T rounds
    backend: str = ""
    extra: dict = field(default_factory=dict)

    @property
    def T(self) -> int:
        return int(self.joint_samples.shape[0])

    @property
    def marginals(self) -> np.ndarray:
        return self.counts / self.T

    def to_dict(self):
        return {
            "format": "cce-result-v1",
            "players": int(self.counts.shape[0]),
            "actions": int(self.counts.shape[1]),
            "marginals": {"denominator": self.T, "numerators": self.counts.tolist()},
            "joint_samples": self.joint_samples.tolist(),
            "params": self.params.to_dict(),
            "query_count": int(self.query_count),
            "noise": self.noise,
            "seed": self.seed,
            **self.extra,
        }

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, d):
        p = dict(d["params"])
        p.pop("paper_scale", None)
        return cls(
            counts=np.asarray(d["marginals"]["numerators"], dtype=np.int64),
            joint_samples=np.asarray(d["joint_samples"], dtype=np.int64).reshape(
                -1, d["players"]),
            params=CceParams(**p),
            query_count=int(d["query_count"]),
            noise=d["noise"],
            seed=d.get("seed"),
        )


def cce_distributions(result: CceResult) -> dict:
    """Product of the marginals and the empirical joint distribution of play."""
    n = result.counts.shape[1]
    return {
        "product": ProductJoint(result.marginals),
        "empirical": SparseJoint.from_samples(result.joint_samples, n),
    }


def _python_rounds(game, eta, delta, mode, uniforms, cum, counts, out, counter):
    m, n = cum.shape
    for r in range(uniforms.shape[0]):
        laws = perturb_rows(gibbs_rows(eta * cum), mode, delta)
        cdf = np.cumsum(laws, axis=1)
        a = (uniforms[r][:, None] * cdf[:, -1:] >= cdf).sum(axis=1)
        a = np.minimum(a, n - 1)
        out[r] = a
        for i in range(m):
            cum[i] += game.loss_vector(i, a, counter)
        counts[np.arange(m), a] += 1


def solve_cce(game, eps, alpha, overrides=None, noise="exact", delta=None, rng=None,
              counter=None, backend="auto") -> CceResult:
    """Run the sample-based MWU solver for an ``eps``-CCE.

    Parameters
    ----------
    game : NormalFormGame
    eps, alpha : float
        Target accuracy and failure probability; they fix ``T``, ``eta`` and
        the default noise level ``delta``.
    overrides : dict, optional
        ``{"T": ..., "delta": ...}`` replacements for the formula values.
    noise : {"exact", "uniform_mix", "argmax_shift"}
    delta : float, optional
        Noise level; defaults to the formula value (ignored for exact noise).
    rng : int, Generator or None
    counter : QueryCounter, optional
        Charged ``m * n * T`` queries.
    backend : {"auto", "compiled", "python"}
        ``compiled`` needs a game small enough to tabulate.
    """
    mode = normalize_noise_mode(noise)
    over = dict(overrides or {})
    if delta is not None:
        over["delta"] = delta
    params = cce_params(eps, game.loss_bound if game.loss_bound > 0 else 1.0,
                        game.actions, alpha, over)
    seed = rng if isinstance(rng, (int, np.integer)) else None
    rng = check_rng(rng)
    if counter is None:
        counter = QueryCounter()
    start = counter.count
    m, n, T = game.players, game.actions, params.T
    noise_desc = {"mode": mode, "delta": params.delta if mode != "exact" else 0.0}

    if n == 1:
        # Only one action: the point mass is an exact CCE and needs no queries.
        return CceResult(
            counts=np.full((m, 1), T, dtype=np.int64),
            joint_samples=np.zeros((T, m), dtype=np.int64),
            params=params, query_count=0, noise=noise_desc, seed=seed,
            cumulative_loss=np.zeros((m, 1)), backend="trivial",
        )

    if backend == "auto":
        backend = "compiled" if game.supports_dense() else "python"
    eff_delta = params.delta if mode != "exact" else 0.0
    cum = np.zeros((m, n))
    counts = np.zeros((m, n), dtype=np.int64)
    samples = np.empty((T, m), dtype=np.int64)

    if backend == "compiled":
        from ._kernels import MODE_CODES, cce_rounds

        table = np.ascontiguousarray(game._dense(), dtype=np.float64)
        code = MODE_CODES[mode]
    for lo in range(0, T, CHUNK_ROUNDS):
        hi = min(T, lo + CHUNK_ROUNDS)
        uniforms = rng.random((hi - lo, m))
        if backend == "compiled":
            cce_rounds(table, n, params.eta, eff_delta, code, uniforms, cum, counts,
                       samples[lo:hi])
            # n table reads per player per round, each one loss query
            counter.add(m * n * (hi - lo))
        elif backend == "python":
            _python_rounds(game, params.eta, eff_delta, mode, uniforms, cum, counts,
                           samples[lo:hi], counter)
        else:
            raise ValueError(f"unknown backend {backend!r}")

    return CceResult(
        counts=counts, joint_samples=samples, params=params,
        query_count=counter.count - start, noise=noise_desc, seed=seed,
        cumulative_loss=cum, backend=backend,
    )


class CCESolver(BaseEstimator):
    """Estimator wrapper: ``fit(game)`` runs the solver, ``predict`` returns a CCE candidate.

    ``target`` selects which output ``predict`` returns: the product of the
    marginals or the empirical joint distribution of play.
    """

    def __init__(self, eps=0.1, alpha=0.1, noise="exact", delta=None, T=None,
                 target="product", backend="auto", random_state=None):
        self.eps = eps
        self.alpha = alpha
        self.noise = noise
        self.delta = delta
        self.T = T
        self.target = target
        self.backend = backend
        self.random_state = random_state

    def fit(self, game, counter=None):
        if self.target not in ("product", "empirical"):
            raise ValueError("target must be 'product' or 'empirical'")
        self.result_ = solve_cce(game, self.eps, self.alpha,
                                 overrides={"T": self.T} if self.T else None,
                                 noise=self.noise, delta=self.delta, rng=self.random_state,
                                 counter=counter, backend=self.backend)
        self.game_ = game
        return self

    def predict(self, game=None):
        return cce_distributions(self.result_)[self.target]

    def score(self, game=None):
        """Negative worst deviation gain, so larger is better."""
        return -verify_cce(game or self.game_, self.predict()).max_gap
