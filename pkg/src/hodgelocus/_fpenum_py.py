"""Pure-Python Fincke-Pohst lattice-ball enumeration (fallback kernel)."""

from __future__ import annotations

import math

import numpy as np


def fincke_pohst(R: np.ndarray, radius2: float, max_points: int = 10_000_000) -> np.ndarray:
    """All integer x with ||R x||^2 <= radius2, R upper triangular with positive diagonal."""
    R = np.ascontiguousarray(R, dtype=float)
    n = R.shape[0]
    if n == 0:
        return np.zeros((1, 0), dtype=np.int64)
    q = [R[i, i] ** 2 for i in range(n)]
    mu = [[R[i, j] / R[i, i] if j > i else 0.0 for j in range(n)] for i in range(n)]
    out = []
    x = [0] * n
    partial = [0.0] * (n + 1)

    def rec(i: int):
        if len(out) > max_points:
            raise OverflowError("too many lattice points")
        c = -sum(mu[i][j] * x[j] for j in range(i + 1, n))
        rem = radius2 - partial[i + 1]
        if rem < 0:
            return
        w = math.sqrt(rem / q[i])
        lo = math.ceil(c - w)
        hi = math.floor(c + w)
        for v in range(lo, hi + 1):
            d = (v - c) ** 2 * q[i]
            if partial[i + 1] + d > radius2:
                continue
            x[i] = v
            partial[i] = partial[i + 1] + d
            if i == 0:
                out.append(tuple(x))
            else:
                rec(i - 1)
        x[i] = 0

    rec(n - 1)
    if not out:
        return np.zeros((0, n), dtype=np.int64)
    return np.array(sorted(out), dtype=np.int64)
