"""Polarized weight-zero Hodge structures: validation, decomposition, Hodge norm,
the functional h -> Q(h, -) on F^1, and enumeration of bounded integral classes.

Two layers are supported. Exact structures carry Gaussian-rational subspaces and
give rational Gram matrices; float structures come from evaluated periods and
carry complex numpy bases.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import numeric
from ._kernels import fincke_pohst
from .exact_core import (
    GQ,
    ZERO,
    DimensionError,
    Matrix,
    Subspace,
    bilinear,
    conjugate,
    intersect,
    projectors,
    vconj,
    vec,
    vsub,
    vscale,
)

FLOAT_TOL = 1e-9


class HodgeMetricError(ValueError):
    """The Hodge-metric Gram matrix is not positive definite."""


# ---------------------------------------------------------------------------
# data types


class PolarizedLattice:
    """H_Z = Z^rank with a symmetric nondegenerate rational pairing Q."""

    def __init__(self, Q, integral: bool = False):
        Q = Q if isinstance(Q, Matrix) else Matrix(Q)
        n, m = Q.shape
        if n != m or n == 0:
            raise DimensionError("Q must be a nonempty square matrix")
        if not Q.is_real():
            raise ValueError("Q must be rational")
        if Q.transpose() != Q:
            raise ValueError("Q is not symmetric")
        if not Q.det():
            raise ValueError("Q is degenerate (det Q = 0)")
        if integral and any(x.re.denominator != 1 for r in Q.rows for x in r):
            raise ValueError("Q is declared integral but has non-integer entries")
        self.Q = Q
        self.rank = n
        self.integral = integral

    def pair(self, u, v) -> GQ:
        return bilinear(self.Q, vec(u), vec(v))

    def Q_float(self) -> np.ndarray:
        return self.Q.to_numpy().real

    def __repr__(self):
        return f"PolarizedLattice(rank={self.rank})"


class HodgeFiltration:
    """Decreasing filtration F^p of H_C.

    `levels` maps p to a basis (rows) of F^p. Levels above the largest given one
    are zero; levels below the smallest given one are all of H_C.
    """

    def __init__(self, levels: dict, ambient: int, layer: str = "exact"):
        if layer not in ("exact", "float"):
            raise ValueError("layer must be 'exact' or 'float'")
        self.layer = layer
        self.ambient = ambient
        self._levels: dict[int, object] = {}
        for p, rows in sorted(levels.items()):
            p = int(p)
            if layer == "exact":
                S = rows if isinstance(rows, Subspace) else Subspace(rows, ambient)
                if S.ambient != ambient:
                    raise DimensionError(f"F^{p} lives in dimension {S.ambient}, expected {ambient}")
                self._levels[p] = S
            else:
                A = np.atleast_2d(np.asarray(rows, dtype=complex)) if len(rows) else np.zeros((0, ambient), complex)
                if A.shape[1] != ambient:
                    raise DimensionError(f"F^{p} lives in dimension {A.shape[1]}, expected {ambient}")
                self._levels[p] = A
        if not self._levels:
            raise ValueError("filtration needs at least one level")
        self.lo = min(self._levels)
        self.hi = max(self._levels)

    def dim(self, p: int) -> int:
        B = self.F(p)
        return B.dim if self.layer == "exact" else numeric.row_basis(B).shape[0]

    def F(self, p: int):
        """F^p as a Subspace (exact) or basis rows (float)."""
        if p in self._levels:
            return self._levels[p]
        if p > self.hi:
            return Subspace.zero(self.ambient) if self.layer == "exact" else np.zeros((0, self.ambient), complex)
        if p < self.lo:
            return Subspace.full(self.ambient) if self.layer == "exact" else np.eye(self.ambient, dtype=complex)
        # gap between given levels: take the next level up
        return self.F(p + 1)

    def basis(self, p: int) -> list:
        """Stored basis vectors of F^p, in stored order."""
        B = self.F(p)
        if self.layer == "exact":
            return list(B.basis)
        return [row for row in B]

    def range(self) -> tuple[int, int]:
        """(a, b) with F^a = H and F^{b+1} = 0, b the top nonzero level."""
        top = max((p for p in self._levels if self.dim(p) > 0), default=self.lo - 1)
        bottom = min((p for p in self._levels if self.dim(p) == self.ambient), default=self.lo - 1)
        return bottom, top

    def to_float(self) -> "HodgeFiltration":
        if self.layer == "float":
            return self
        return HodgeFiltration(
            {p: Matrix._raw(S.basis, self.ambient).to_numpy() if S.dim else np.zeros((0, self.ambient), complex)
             for p, S in self._levels.items()},
            self.ambient,
            "float",
        )

    def levels(self) -> dict:
        return dict(self._levels)


@dataclass
class Diagnostic:
    """A failed validation: which relation broke and a witness."""

    kind: str
    message: str
    p: int | None = None
    q: int | None = None
    witness: object = None
    ok: bool = False

    def to_json(self):
        w = self.witness
        if w is not None:
            w = [x.to_json() if isinstance(x, GQ) else numeric.fmt_complex(x) for x in w]
        return {"ok": False, "kind": self.kind, "message": self.message, "p": self.p, "q": self.q, "witness": w}


@dataclass
class PureHodgeStructure:
    lattice: PolarizedLattice
    filtration: HodgeFiltration
    components: dict  # p -> Subspace (exact) or rows (float)
    proj: dict  # p -> projector onto H^{p,-p} along the others
    gram: object  # real Gram of the Hodge norm on H_R
    eps_gram: object  # real Gram of ||h^{<0}||^2
    layer: str = "exact"
    ok: bool = True
    _chol: object = field(default=None, repr=False)

    @property
    def rank(self) -> int:
        return self.lattice.rank

    def hodge_numbers(self) -> dict[int, int]:
        if self.layer == "exact":
            return {p: S.dim for p, S in self.components.items()}
        return {p: B.shape[0] for p, B in self.components.items()}


# ---------------------------------------------------------------------------
# validation


def _sign(p: int) -> int:
    return -1 if p % 2 else 1


def _hermitian_pivots(basis: Sequence[tuple], form) -> tuple[int, object] | None:
    """Gram-Schmidt under a Hermitian form; returns (index, vector) of the first
    nonpositive pivot, or None if the form is positive definite on the span."""
    done: list[tuple[tuple, Fraction]] = []
    for k, b in enumerate(basis):
        v = b
        for u, nu in done:
            c = form(v, u) / nu
            v = vsub(v, vscale(c, u))
        d = form(v, v)
        if not d.is_real():
            raise ValueError("form is not Hermitian on this subspace")
        if d.re <= 0:
            return k, v
        done.append((v, d))
    return None


def validate_polarized_hs(L: PolarizedLattice, F: HodgeFiltration, tol: float = FLOAT_TOL):
    """PureHodgeStructure if (L, F) is a polarized weight-zero HS, else a Diagnostic."""
    n = L.rank
    if F.ambient != n:
        raise DimensionError(f"filtration lives in dimension {F.ambient}, lattice has rank {n}")
    if F.layer == "float":
        return _validate_float(L, F, tol)
    Q = L.Q
    a, b = F.range()
    lo = min(a, -b)
    hi = max(b, -a)
    for p in range(lo, hi + 1):
        if not F.F(p).contains_space(F.F(p + 1)):
            return Diagnostic("filtration", f"F^{p + 1} is not contained in F^{p}", p=p)
    if F.F(lo).dim != n or F.F(hi + 1).dim != 0:
        return Diagnostic("filtration", "filtration is not exhaustive")
    # first bilinear relation Q(F^p, F^q) = 0 for p + q > 0
    for p in range(hi, lo - 1, -1):
        for q in range(hi, -p, -1):
            if q < p:
                continue
            for u in F.F(p).basis:
                Qu = Q.transpose() @ u
                for v in F.F(q).basis:
                    if sum((x * y for x, y in zip(Qu, v)), ZERO):
                        return Diagnostic(
                            "first_relation", f"Q(F^{p}, F^{q}) != 0 with p+q = {p + q} > 0", p=p, q=q, witness=u
                        )
    comps = {p: intersect(F.F(p), conjugate(F.F(-p))) for p in range(lo, hi + 1)}
    comps = {p: S for p, S in comps.items() if S.dim}
    if sum(S.dim for S in comps.values()) != n or Subspace([v for S in comps.values() for v in S.basis], n).dim != n:
        return Diagnostic("decomposition", "the spaces F^p cap conj(F^-p) do not span H")
    for p in sorted(comps, reverse=True):
        s = _sign(p)

        def form(x, y, s=s):
            return bilinear(Q, x, vconj(y)) * s

        bad = _hermitian_pivots(comps[p].basis, form)
        if bad is not None:
            return Diagnostic(
                "positivity", f"(-1)^p Q(v, conj v) <= 0 on H^{{{p},{-p}}}", p=p, q=-p, witness=bad[1]
            )
    ps = sorted(comps)
    Ps = dict(zip(ps, projectors([comps[p] for p in ps])))
    G = _gram(Q, Ps, ps)
    Ge = _gram(Q, Ps, [p for p in ps if p <= -1])
    return PureHodgeStructure(L, F, comps, Ps, G, Ge, "exact")


def _gram(Q: Matrix, Ps: dict, ps) -> Matrix:
    n = Q.nrows
    G = Matrix.zeros(n, n)
    for p in ps:
        P = Ps[p]
        G = G + (P.transpose() @ Q @ P.conj()).scale(_sign(p))
    # for real h only the real part contributes to h^T G h
    return Matrix._raw(tuple(tuple(GQ(x.re) for x in r) for r in G.rows), n)


def _validate_float(L: PolarizedLattice, F: HodgeFiltration, tol: float):
    n = L.rank
    Q = L.Q_float()
    scale = max(1.0, float(np.abs(Q).max()))
    a, b = F.range()
    lo = min(a, -b)
    hi = max(b, -a)
    ob = {p: numeric.row_basis(F.F(p)) for p in range(lo - 1, hi + 2)}
    for p in range(lo, hi + 1):
        if ob[p + 1].shape[0] and max(numeric.in_span_residual(ob[p], v) for v in ob[p + 1]) > 1e-7:
            return Diagnostic("filtration", f"F^{p + 1} is not contained in F^{p}", p=p)
    for p in range(hi, lo - 1, -1):
        for q in range(hi, -p, -1):
            if q < p or not ob[p].shape[0] or not ob[q].shape[0]:
                continue
            M = ob[p] @ Q @ ob[q].T
            if np.abs(M).max() > tol * scale * 100:
                return Diagnostic("first_relation", f"Q(F^{p}, F^{q}) != 0 with p+q = {p + q} > 0", p=p, q=q)
    comps = {}
    for p in range(lo, hi + 1):
        C = numeric.intersect_rows(ob[p], ob[-p].conj(), tol=1e-7)
        if C.shape[0]:
            comps[p] = C
    B = np.vstack([comps[p] for p in sorted(comps)]) if comps else np.zeros((0, n))
    if B.shape[0] != n or np.linalg.matrix_rank(B, tol=1e-7) != n:
        return Diagnostic("decomposition", "the spaces F^p cap conj(F^-p) do not span H")
    for p in sorted(comps, reverse=True):
        C = comps[p]
        H = _sign(p) * (C @ Q @ C.conj().T)
        H = (H + H.conj().T) / 2
        w, V = np.linalg.eigh(H)
        if w[0] <= tol * scale:
            return Diagnostic(
                "positivity", f"(-1)^p Q(v, conj v) <= 0 on H^{{{p},{-p}}}", p=p, q=-p, witness=tuple(V[:, 0] @ C)
            )
    ps = sorted(comps)
    Binv = np.linalg.inv(B.T)
    Ps = {}
    k = 0
    for p in ps:
        d = comps[p].shape[0]
        Ps[p] = comps[p].T @ Binv[k : k + d, :]
        k += d
    G = sum(_sign(p) * (Ps[p].T @ Q @ Ps[p].conj()) for p in ps).real
    Ge = sum((_sign(p) * (Ps[p].T @ Q @ Ps[p].conj()) for p in ps if p <= -1), np.zeros((n, n), complex)).real
    return PureHodgeStructure(L, F, comps, Ps, (G + G.T) / 2, (Ge + Ge.T) / 2, "float")


def require_hs(L: PolarizedLattice, F: HodgeFiltration, tol: float = FLOAT_TOL) -> PureHodgeStructure:
    out = validate_polarized_hs(L, F, tol)
    if isinstance(out, Diagnostic):
        raise ValueError(f"not a polarized Hodge structure: {out.message}")
    return out


def is_polarized(L: PolarizedLattice, F: HodgeFiltration, tol: float = FLOAT_TOL) -> bool:
    return isinstance(validate_polarized_hs(L, F, tol), PureHodgeStructure)


# ---------------------------------------------------------------------------
# decomposition, norm, epsilon


def hodge_decompose_and_norm(HS: PureHodgeStructure, h):
    """(components {p: h^{p,-p}}, ||h||_H^2)."""
    if not isinstance(HS, PureHodgeStructure):
        raise ValueError("Hodge structure is invalid")
    if HS.layer == "exact":
        h = vec(h)
        comps = {p: P @ h for p, P in HS.proj.items()}
        total = ZERO
        for p, c in comps.items():
            total = total + bilinear(HS.lattice.Q, c, vconj(c)) * _sign(p)
        if not total.is_real():
            raise ArithmeticError("Hodge norm is not real; decomposition is inconsistent")
        return comps, total.re
    hv = np.asarray([complex(x) for x in h], dtype=complex)
    Q = HS.lattice.Q_float()
    comps = {p: P @ hv for p, P in HS.proj.items()}
    total = sum(_sign(p) * (c @ Q @ c.conj()) for p, c in comps.items())
    return comps, float(np.real(total))


def hodge_norm2_many(HS: PureHodgeStructure, points, max_p: int | None = None) -> list[Fraction]:
    """Exact ||h||_H^2 for many integral h at once (exact layer only).

    With max_p set, only the components h^{p,-p} with p <= max_p are counted
    (max_p = -1 gives the epsilon norm).

    Same projector decomposition as hodge_decompose_and_norm, but in scaled
    integer arithmetic: with h^p = (X_p + i Y_p) h / D_p and Q = Q_n / D_Q,
    ||h||^2 = sum_p (-1)^p (x^T Q_n x + y^T Q_n y) / (D_p^2 D_Q).
    """
    if not isinstance(HS, PureHodgeStructure) or HS.layer != "exact":
        raise ValueError("exact Hodge structure expected")
    pts = np.asarray(points, dtype=object).reshape(-1, HS.rank)
    Qn, DQ = int_scaled(HS.lattice.Q)
    Qn = Qn.astype(object)
    num = [0] * len(pts)
    den = 1
    parts = []
    for p, P in HS.proj.items():
        if max_p is not None and p > max_p:
            continue
        D = 1
        for r in P.rows:
            for x in r:
                D = D * x.re.denominator // math.gcd(D, x.re.denominator)
                D = D * x.im.denominator // math.gcd(D, x.im.denominator)
        X = np.array([[int(x.re * D) for x in r] for r in P.rows], dtype=object)
        Y = np.array([[int(x.im * D) for x in r] for r in P.rows], dtype=object)
        parts.append((_sign(p), D, X, Y))
        den = den * D * D // math.gcd(den, D * D)
    for sg, D, X, Y in parts:
        xs, ys = pts @ X.T, pts @ Y.T
        val = ((xs @ Qn) * xs).sum(axis=1) + ((ys @ Qn) * ys).sum(axis=1)
        f = den // (D * D)
        num = [a + sg * f * int(v) for a, v in zip(num, val)]
    return [Fraction(a, den * DQ) for a in num]


def hodge_norm2(HS: PureHodgeStructure, h):
    return hodge_decompose_and_norm(HS, h)[1]


def epsilon_functional(HS: PureHodgeStructure, h) -> tuple:
    """Coefficients (Q(h, f_i))_i over the stored basis f_i of F^1."""
    F1 = HS.filtration.basis(1)
    if HS.layer == "exact":
        h = vec(h)
        return tuple(bilinear(HS.lattice.Q, h, f) for f in F1)
    hv = np.asarray([complex(x) for x in h], dtype=complex)
    Q = HS.lattice.Q_float()
    return tuple(complex(hv @ Q @ f) for f in F1)


def epsilon_norm2(HS: PureHodgeStructure, h):
    """Hodge norm squared of the part of h in the sum of H^{p,-p}, p <= -1."""
    comps, _ = hodge_decompose_and_norm(HS, h)
    Q = HS.lattice.Q if HS.layer == "exact" else HS.lattice.Q_float()
    if HS.layer == "exact":
        total = ZERO
        for p, c in comps.items():
            if p <= -1:
                total = total + bilinear(Q, c, vconj(c)) * _sign(p)
        return total.re
    return float(sum(np.real(_sign(p) * (c @ Q @ c.conj())) for p, c in comps.items() if p <= -1))


def is_hodge_class(HS: PureHodgeStructure, h) -> bool:
    if HS.layer == "exact":
        return HS.filtration.F(0).contains(vec(h))
    return numeric.in_span_residual(HS.filtration.F(0), np.asarray(h, dtype=complex)) < 1e-9


# ---------------------------------------------------------------------------
# enumeration


def int_scaled(M) -> tuple[np.ndarray, int]:
    """(D*M as an integer array, D) for a rational matrix M."""
    if not isinstance(M, Matrix):
        raise TypeError("exact matrix expected")
    D = 1
    for r in M.rows:
        for x in r:
            D = D * x.re.denominator // np.gcd(D, x.re.denominator)
    A = [[int(x.re * D) for x in r] for r in M.rows]
    big = max((abs(x) for r in A for x in r), default=0)
    return np.array(A, dtype=object if big > 2**40 else np.int64), D


def quadratic_values(points: np.ndarray, M) -> list[Fraction]:
    """Exact x^T M x for each integer row x (M rational, exact)."""
    A, D = int_scaled(M)
    pts = np.asarray(points, dtype=np.int64)
    if pts.size == 0:
        return []
    mx = int(np.abs(pts).max()) if pts.size else 0
    bound = (mx**2) * int(np.abs(A).max() if A.size else 0) * pts.shape[1] ** 2
    if A.dtype == object or bound > 2**62:
        P = pts.astype(object)
        vals = ((P @ A.astype(object)) * P).sum(axis=1)
    else:
        vals = ((pts @ A) * pts).sum(axis=1)
    return [Fraction(int(v), D) for v in vals]


def _cholesky_upper(G: np.ndarray) -> np.ndarray:
    try:
        L = np.linalg.cholesky(G)
    except np.linalg.LinAlgError as e:
        raise HodgeMetricError("Hodge metric Gram matrix is numerically indefinite") from e
    return np.ascontiguousarray(L.T)


def ball_points(HS: PureHodgeStructure, radius2: float) -> np.ndarray:
    """Integer points with ||h||_H^2 <= radius2 (float pruning with a small slack)."""
    G = HS.gram.to_numpy().real if HS.layer == "exact" else np.asarray(HS.gram, float)
    if HS._chol is None:
        HS._chol = _cholesky_upper(G)
    return fincke_pohst(HS._chol, float(radius2) * (1 + 1e-6) + 1e-6)


def enumerate_bounded_classes(HS: PureHodgeStructure, K, R) -> list[tuple[int, ...]]:
    """All integral h with |Q(h,h)| <= K and ||eps(h)||_H <= R, lexicographically sorted."""
    if not isinstance(HS, PureHodgeStructure):
        raise ValueError("Hodge structure is invalid")
    K = Fraction(K)
    R = Fraction(R)
    if K < 0 or R < 0:
        raise ValueError("K and R must be nonnegative")
    pts = ball_points(HS, float(K + 4 * R * R))
    if HS.layer == "exact":
        qv = quadratic_values(pts, HS.lattice.Q)
        ev = quadratic_values(pts, HS.eps_gram)
        R2 = R * R
        keep = [tuple(int(x) for x in p) for p, q, e in zip(pts, qv, ev) if abs(q) <= K and e <= R2]
    else:
        Q = HS.lattice.Q_float()
        Pf = pts.astype(float)
        qv = np.einsum("ij,jk,ik->i", Pf, Q, Pf)
        ev = np.einsum("ij,jk,ik->i", Pf, HS.eps_gram, Pf)
        slack = 1e-9 * max(1.0, float(K))
        keep = [
            tuple(int(x) for x in p)
            for p, q, e in zip(pts, qv, ev)
            if abs(q) <= float(K) + slack and e <= float(R * R) + slack
        ]
    return sorted(keep)


def brute_force_bounded_classes(HS: PureHodgeStructure, K, R, box: int, chunk: int = 1 << 20) -> list[tuple[int, ...]]:
    """Independent oracle: scan the cube |h_i| <= box with exact tests."""
    return sorted(brute_force_class_values(HS, K, R, box, chunk))


def brute_force_class_values(HS: PureHodgeStructure, K, R, box: int, chunk: int = 1 << 20) -> dict:
    """{h: (Q(h,h), ||eps(h)||^2)} over the admissible h in the cube |h_i| <= box, exact values.

    The cube is walked in chunks; exact integer Q-values and a float estimate of
    the epsilon norm (with slack) discard most points before the exact test.
    """
    K = Fraction(K)
    R = Fraction(R)
    n = HS.rank
    # float projector onto the p <= -1 part, built column by column from exact decompositions
    Q = HS.lattice.Q_float().real
    cols = {}
    for i in range(n):
        comps, _ = hodge_decompose_and_norm(HS, [int(i == j) for j in range(n)])
        for p, c in comps.items():
            if p <= -1:
                cols.setdefault(p, np.zeros((n, n), dtype=complex))[:, i] = [complex(x) for x in c]
    r2 = float(R * R) * (1 + 1e-6) + 1e-6
    A, D = int_scaled(HS.lattice.Q)
    amax = int(np.abs(A).max()) if A.size else 0
    side = np.arange(-box, box + 1, dtype=np.int64)
    total = len(side) ** n
    out = {}
    for start in range(0, total, chunk):
        idx = np.arange(start, min(total, start + chunk), dtype=np.int64)
        pts = np.empty((len(idx), n), dtype=np.int64)
        for j in range(n - 1, -1, -1):
            pts[:, j] = side[idx % len(side)]
            idx //= len(side)
        if A.dtype == object or box * box * amax * n * n * max(K.numerator, 1) > 2**62:
            keep = np.array([abs(q) <= K for q in quadratic_values(pts, HS.lattice.Q)], dtype=bool)
        else:
            qv = ((pts @ A) * pts).sum(axis=1)
            keep = np.abs(qv) * K.denominator <= K.numerator * D
        pts = pts[keep]
        if not len(pts):
            continue
        est = np.zeros(len(pts))
        for p, Pm in cols.items():
            C = pts.astype(float) @ Pm.T
            est += _sign(p) * np.real(np.sum((C @ Q) * C.conj(), axis=1))
        cand = pts[est <= r2]
        if not len(cand):
            continue
        if HS.layer == "exact":
            evals = hodge_norm2_many(HS, cand, max_p=-1)
            limit = R * R
        else:
            evals = [epsilon_norm2(HS, [int(v) for v in x]) for x in cand]
            limit = float(R * R) + 1e-9 * max(1.0, float(K))
        qvals = quadratic_values(cand, HS.lattice.Q)
        for x, e, q in zip(cand, evals, qvals):
            if e <= limit:
                out[tuple(int(v) for v in x)] = (q, e)
    return out


def box_radius(HS: PureHodgeStructure, radius2: float) -> int:
    """Smallest integer box containing the Hodge-metric ball of the given radius."""
    G = HS.gram.to_numpy().real if HS.layer == "exact" else np.asarray(HS.gram, float)
    Ginv = np.linalg.inv(G)
    return int(np.floor(np.sqrt(max(radius2, 0.0) * np.max(np.diag(Ginv))) + 1e-9))
