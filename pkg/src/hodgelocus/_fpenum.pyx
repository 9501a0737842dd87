# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled Fincke-Pohst lattice-ball enumeration."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, ceil, floor

cnp.import_array()


def fincke_pohst(R, double radius2, long max_points=10_000_000):
    """All integer x with ||R x||^2 <= radius2, R upper triangular with positive diagonal."""
    cdef cnp.ndarray[cnp.float64_t, ndim=2] Rm = np.ascontiguousarray(R, dtype=np.float64)
    cdef Py_ssize_t n = Rm.shape[0]
    if n == 0:
        return np.zeros((1, 0), dtype=np.int64)
    cdef double[:, ::1] mu = np.zeros((n, n))
    cdef double[::1] q = np.zeros(n)
    cdef double[::1] partial = np.zeros(n + 1)
    cdef double[::1] center = np.zeros(n)
    cdef long[::1] x = np.zeros(n, dtype=np.int64)
    cdef long[::1] hi = np.zeros(n, dtype=np.int64)
    cdef Py_ssize_t i, j
    cdef double c, rem, w, d
    for i in range(n):
        q[i] = Rm[i, i] * Rm[i, i]
        for j in range(i + 1, n):
            mu[i, j] = Rm[i, j] / Rm[i, i]
    cdef Py_ssize_t cap = 1024
    buf = np.empty((cap, n), dtype=np.int64)
    cdef long[:, ::1] bv = buf
    cdef long count = 0
    i = n - 1
    partial[n] = 0.0
    # set up level i
    center[i] = 0.0
    rem = radius2
    if rem < 0:
        return np.zeros((0, n), dtype=np.int64)
    w = sqrt(rem / q[i])
    x[i] = <long> ceil(center[i] - w) - 1
    hi[i] = <long> floor(center[i] + w)
    while True:
        x[i] += 1
        if x[i] > hi[i]:
            i += 1
            if i == n:
                break
            continue
        d = (x[i] - center[i]) * (x[i] - center[i]) * q[i]
        if partial[i + 1] + d > radius2:
            continue
        partial[i] = partial[i + 1] + d
        if i == 0:
            if count == cap:
                cap *= 2
                buf = np.resize(buf, (cap, n))
                bv = buf
            for j in range(n):
                bv[count, j] = x[j]
            count += 1
            if count > max_points:
                raise OverflowError("too many lattice points")
            continue
        i -= 1
        c = 0.0
        for j in range(i + 1, n):
            c -= mu[i, j] * x[j]
        center[i] = c
        rem = radius2 - partial[i + 1]
        w = sqrt(rem / q[i]) if rem > 0 else 0.0
        x[i] = <long> ceil(c - w) - 1
        hi[i] = <long> floor(c + w)
    pts = buf[:count]
    # lexicographic row order, matching sorted() on tuples
    return np.ascontiguousarray(pts[np.lexsort(pts.T[::-1])])
