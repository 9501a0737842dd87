"""Float-layer helpers: subspaces as orthonormal row bases, nilpotent exponentials."""

from __future__ import annotations

import math

import numpy as np
from scipy.linalg import null_space, orth

RANK_TOL = 1e-9


def expm_nilpotent(X: np.ndarray) -> np.ndarray:
    """exp(X) for a nilpotent matrix, summed exactly up to X^n."""
    n = X.shape[0]
    out = np.eye(n, dtype=complex)
    term = np.eye(n, dtype=complex)
    for k in range(1, n + 1):
        term = term @ X / k
        if not term.any():
            break
        out = out + term
    return out


def row_basis(A: np.ndarray, tol: float = RANK_TOL) -> np.ndarray:
    """Orthonormal rows spanning the row space of A."""
    A = np.atleast_2d(np.asarray(A, dtype=complex))
    if A.size == 0 or A.shape[0] == 0:
        return np.zeros((0, A.shape[1]), dtype=complex)
    Q = orth(A.T, rcond=tol)
    return Q.T.copy()


def intersect_rows(A: np.ndarray, B: np.ndarray, tol: float = RANK_TOL) -> np.ndarray:
    n = A.shape[1]
    if A.shape[0] == 0 or B.shape[0] == 0:
        return np.zeros((0, n), dtype=complex)
    M = np.hstack([A.T, -B.T])
    K = null_space(M, rcond=tol)
    if K.shape[1] == 0:
        return np.zeros((0, n), dtype=complex)
    vecs = (A.T @ K[: A.shape[0], :]).T
    return row_basis(vecs, tol)


def projector(basis_rows: np.ndarray) -> np.ndarray:
    """Orthogonal projector onto the span of orthonormal rows."""
    if basis_rows.shape[0] == 0:
        return np.zeros((basis_rows.shape[1],) * 2, dtype=complex)
    return basis_rows.T @ basis_rows.conj()


def grassmann_distance(A: np.ndarray, B: np.ndarray) -> float:
    """Spectral norm of the difference of orthogonal projectors (inf if dims differ)."""
    a = row_basis(A)
    b = row_basis(B)
    if a.shape[0] != b.shape[0]:
        return math.inf
    return float(np.linalg.norm(projector(a) - projector(b), 2))


def in_span_residual(basis_rows: np.ndarray, v: np.ndarray) -> float:
    """Relative least-squares residual of v against the span of the rows."""
    v = np.asarray(v, dtype=complex)
    nv = np.linalg.norm(v)
    if nv == 0:
        return 0.0
    if basis_rows.shape[0] == 0:
        return 1.0
    b = row_basis(basis_rows)
    r = v - b.T @ (b.conj() @ v)
    return float(np.linalg.norm(r) / nv)


def loglinear_slope(x: np.ndarray, y: np.ndarray) -> float:
    """Least-squares slope of log(y) against x over entries with y > 0."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    mask = y > 1e-300
    if mask.sum() < 2:
        return math.nan
    return float(np.polyfit(x[mask], np.log(y[mask]), 1)[0])


def fmt_complex(z) -> list[float]:
    """[re, im] with 17 significant digits survive a JSON round trip."""
    z = complex(z)
    return [float(f"{z.real:.17g}"), float(f"{z.imag:.17g}")]
