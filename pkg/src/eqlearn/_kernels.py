"""Compiled round loop for the sample-based CCE solver on tabulated games."""

from __future__ import annotations

import numpy as np
from numba import njit

MODE_CODES = {"exact": 0, "uniform_mix": 1, "argmax_shift": 2}


@njit(cache=True, nogil=True)
def cce_rounds(table, n, eta, delta, mode, uniforms, cum, counts, out):
    """Play ``len(uniforms)`` rounds in place.

    table    : (m, n**m) losses, row-major profiles
    uniforms : (R, m) draws in [0, 1), one per player per round
    cum      : (m, n) cumulative realized loss vectors (updated)
    counts   : (m, n) action counts (updated)
    out      : (R, m) sampled profiles (written)
    """
    m = table.shape[0]
    R = uniforms.shape[0]
    strides = np.empty(m, dtype=np.int64)
    s = 1
    for j in range(m - 1, -1, -1):
        strides[j] = s
        s *= n
    p = np.empty(n)
    cdf = np.empty(n)
    for r in range(R):
        for i in range(m):
            lo = eta * cum[i, 0]
            for j in range(1, n):
                v = eta * cum[i, j]
                if v < lo:
                    lo = v
            tot = 0.0
            for j in range(n):
                p[j] = np.exp(-(eta * cum[i, j] - lo))
                tot += p[j]
            tot2 = 0.0
            for j in range(n):
                p[j] = p[j] / tot
                tot2 += p[j]
            for j in range(n):
                p[j] = p[j] / tot2
            if delta > 0.0:
                if mode == 1:
                    for j in range(n):
                        p[j] = (1.0 - delta) * p[j] + delta / n
                elif mode == 2:
                    hi = 0
                    lo_i = 0
                    for j in range(1, n):
                        if p[j] > p[hi]:
                            hi = j
                        if p[j] < p[lo_i]:
                            lo_i = j
                    if hi != lo_i:
                        shift = delta if delta < p[hi] else p[hi]
                        p[hi] -= shift
                        p[lo_i] += shift
            acc = 0.0
            for j in range(n):
                acc += p[j]
                cdf[j] = acc
            x = uniforms[r, i] * cdf[n - 1]
            a = 0
            for j in range(n):
                if cdf[j] <= x:
                    a += 1
            if a > n - 1:
                a = n - 1
            out[r, i] = a
        flat = 0
        for i in range(m):
            flat += out[r, i] * strides[i]
        for i in range(m):
            base = flat - out[r, i] * strides[i]
            for j in range(n):
                cum[i, j] += table[i, base + j * strides[i]]
            counts[i, out[r, i]] += 1
