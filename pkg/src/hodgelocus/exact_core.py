"""Exact linear algebra over Q(i), integer lattices and binomial ideals.

Everything structural in the package (filtrations, splittings, lattices) is
computed here without rounding.  Floats only enter through the explicit
:meth:`Matrix.to_numpy` cast; there is no way back.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np


class LayerError(TypeError):
    """Raised when exact and float data are mixed implicitly."""


class DimensionError(ValueError):
    pass


# ---------------------------------------------------------------------------
# scalars


class GQ:
    """Gaussian rational a + b*i with Fraction parts."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        if isinstance(re, float) or isinstance(im, float):
            raise LayerError("float -> exact conversion is not allowed")
        self.re = re if isinstance(re, Fraction) else Fraction(re)
        self.im = im if isinstance(im, Fraction) else Fraction(im)

    # construction helpers
    @staticmethod
    def coerce(x) -> "GQ":
        if isinstance(x, GQ):
            return x
        if isinstance(x, (int, Fraction)):
            return GQ(x)
        if isinstance(x, str):
            return GQ(Fraction(x))
        if isinstance(x, (float, complex, np.floating, np.complexfloating)):
            raise LayerError("float -> exact conversion is not allowed")
        if isinstance(x, np.integer):
            return GQ(int(x))
        raise TypeError(f"cannot interpret {x!r} as a Gaussian rational")

    def __add__(self, o):
        o = _c(o)
        if o is NotImplemented:
            return o
        return GQ(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __sub__(self, o):
        o = _c(o)
        if o is NotImplemented:
            return o
        return GQ(self.re - o.re, self.im - o.im)

    def __rsub__(self, o):
        o = _c(o)
        if o is NotImplemented:
            return o
        return GQ(o.re - self.re, o.im - self.im)

    def __mul__(self, o):
        o = _c(o)
        if o is NotImplemented:
            return o
        if not self.im and not o.im:
            return GQ(self.re * o.re)
        return GQ(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def __truediv__(self, o):
        o = _c(o)
        if o is NotImplemented:
            return o
        if not o.im:
            if not o.re:
                raise ZeroDivisionError("division by zero in Q(i)")
            return GQ(self.re / o.re, self.im / o.re)
        d = o.re * o.re + o.im * o.im
        return GQ((self.re * o.re + self.im * o.im) / d, (self.im * o.re - self.re * o.im) / d)

    def __rtruediv__(self, o):
        o = _c(o)
        if o is NotImplemented:
            return o
        return o / self

    def __neg__(self):
        return GQ(-self.re, -self.im)

    def __pos__(self):
        return self

    def __pow__(self, k: int):
        if not isinstance(k, int):
            raise TypeError("only integer powers")
        if k < 0:
            return (GQ(1) / self) ** (-k)
        out, base = GQ(1), self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def conjugate(self) -> "GQ":
        return GQ(self.re, -self.im)

    def norm2(self) -> Fraction:
        return self.re * self.re + self.im * self.im

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __eq__(self, o):
        o = _c(o)
        if o is NotImplemented:
            return False
        return self.re == o.re and self.im == o.im

    def __hash__(self):
        return hash((self.re, self.im))

    def is_real(self) -> bool:
        return not self.im

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __repr__(self):
        if not self.im:
            return str(self.re)
        return f"({self.re}{'+' if self.im >= 0 else '-'}{abs(self.im)}i)"

    def to_json(self):
        if not self.im:
            return str(self.re)
        return {"re": str(self.re), "im": str(self.im)}


def _c(x):
    if isinstance(x, GQ):
        return x
    if isinstance(x, (int, Fraction)):
        return GQ(x)
    if isinstance(x, np.integer):
        return GQ(int(x))
    if isinstance(x, (float, complex)):
        raise LayerError("float -> exact conversion is not allowed")
    return NotImplemented


I = GQ(0, 1)
ZERO = GQ(0)
ONE = GQ(1)


def parse_scalar(x) -> GQ:
    """Parse instance-file scalars: ints, "p/q" strings or {"re","im"} dicts."""
    if isinstance(x, dict):
        return GQ(Fraction(str(x.get("re", "0"))), Fraction(str(x.get("im", "0"))))
    if isinstance(x, bool):
        raise TypeError("boolean is not a scalar")
    if isinstance(x, (list, tuple)) and len(x) == 2:
        return GQ(Fraction(str(x[0])), Fraction(str(x[1])))
    if isinstance(x, str):
        return GQ(Fraction(x))
    return GQ.coerce(x)


# ---------------------------------------------------------------------------
# matrices


class Matrix:
    """Immutable dense matrix with GQ entries."""

    __slots__ = ("rows", "nrows", "ncols")

    def __init__(self, rows: Iterable[Iterable], ncols: int | None = None):
        rs = tuple(tuple(GQ.coerce(x) for x in r) for r in rows)
        self.rows = rs
        self.nrows = len(rs)
        if ncols is None:
            ncols = len(rs[0]) if rs else 0
        self.ncols = ncols
        for r in rs:
            if len(r) != ncols:
                raise DimensionError("ragged matrix")

    @classmethod
    def _raw(cls, rows, ncols):
        m = object.__new__(cls)
        m.rows = rows
        m.nrows = len(rows)
        m.ncols = ncols
        return m

    @classmethod
    def zeros(cls, r: int, c: int) -> "Matrix":
        return cls._raw(tuple((ZERO,) * c for _ in range(r)), c)

    @classmethod
    def identity(cls, n: int) -> "Matrix":
        return cls._raw(tuple(tuple(ONE if i == j else ZERO for j in range(n)) for i in range(n)), n)

    @classmethod
    def from_columns(cls, cols: Sequence[Sequence], n: int | None = None) -> "Matrix":
        cols = [tuple(GQ.coerce(x) for x in c) for c in cols]
        if not cols:
            return cls.zeros(n or 0, 0)
        return cls._raw(tuple(tuple(c[i] for c in cols) for i in range(len(cols[0]))), len(cols))

    @classmethod
    def diag(cls, entries: Sequence) -> "Matrix":
        n = len(entries)
        return cls(
            [[entries[i] if i == j else 0 for j in range(n)] for i in range(n)], n
        )

    @property
    def shape(self):
        return (self.nrows, self.ncols)

    def __getitem__(self, ij):
        i, j = ij
        return self.rows[i][j]

    def column(self, j: int) -> tuple:
        return tuple(r[j] for r in self.rows)

    def columns(self) -> list[tuple]:
        return [self.column(j) for j in range(self.ncols)]

    def transpose(self) -> "Matrix":
        if self.ncols == 0:
            return Matrix._raw(tuple(), self.nrows)
        return Matrix._raw(tuple(tuple(r[j] for r in self.rows) for j in range(self.ncols)), self.nrows)

    def conj(self) -> "Matrix":
        return Matrix._raw(tuple(tuple(x.conjugate() for x in r) for r in self.rows), self.ncols)

    def is_real(self) -> bool:
        return all(not x.im for r in self.rows for x in r)

    def __eq__(self, o):
        return isinstance(o, Matrix) and self.shape == o.shape and self.rows == o.rows

    def __hash__(self):
        return hash(self.rows)

    def __add__(self, o: "Matrix") -> "Matrix":
        if self.shape != o.shape:
            raise DimensionError(f"shape mismatch {self.shape} vs {o.shape}")
        return Matrix._raw(tuple(tuple(a + b for a, b in zip(r, s)) for r, s in zip(self.rows, o.rows)), self.ncols)

    def __sub__(self, o: "Matrix") -> "Matrix":
        if self.shape != o.shape:
            raise DimensionError(f"shape mismatch {self.shape} vs {o.shape}")
        return Matrix._raw(tuple(tuple(a - b for a, b in zip(r, s)) for r, s in zip(self.rows, o.rows)), self.ncols)

    def __neg__(self):
        return Matrix._raw(tuple(tuple(-a for a in r) for r in self.rows), self.ncols)

    def scale(self, c) -> "Matrix":
        c = GQ.coerce(c)
        return Matrix._raw(tuple(tuple(c * a for a in r) for r in self.rows), self.ncols)

    def __matmul__(self, o):
        if isinstance(o, Matrix):
            if self.ncols != o.nrows:
                raise DimensionError(f"cannot multiply {self.shape} by {o.shape}")
            cols = o.transpose().rows if o.ncols else ()
            out = []
            for r in self.rows:
                nz = [(k, a) for k, a in enumerate(r) if a]
                row = []
                for c in cols:
                    s = ZERO
                    for k, a in nz:
                        b = c[k]
                        if b:
                            s = s + a * b
                    row.append(s)
                out.append(tuple(row))
            return Matrix._raw(tuple(out), o.ncols)
        # vector
        v = tuple(GQ.coerce(x) for x in o)
        if len(v) != self.ncols:
            raise DimensionError("vector length mismatch")
        return tuple(dot(r, v) for r in self.rows)

    def apply(self, v: Sequence) -> tuple:
        return self @ v

    def is_zero(self) -> bool:
        return all(not x for r in self.rows for x in r)

    def power(self, k: int) -> "Matrix":
        out = Matrix.identity(self.nrows)
        for _ in range(k):
            out = out @ self
        return out

    def to_numpy(self) -> np.ndarray:
        """Explicit exact -> float cast."""
        a = np.zeros(self.shape, dtype=complex)
        for i, r in enumerate(self.rows):
            for j, x in enumerate(r):
                if x:
                    a[i, j] = complex(x)
        return a

    def to_json(self):
        return [[x.to_json() for x in r] for r in self.rows]

    def __repr__(self):
        return "Matrix(" + repr([list(r) for r in self.rows]) + ")"

    # --- elimination

    def rref(self) -> tuple["Matrix", tuple[int, ...]]:
        rows = [list(r) for r in self.rows]
        return _rref_rows(rows, self.ncols)

    def rank(self) -> int:
        return len(self.rref()[1])

    def nullspace(self) -> list[tuple]:
        """Basis of {x : self @ x = 0}, canonical (one vector per free column)."""
        R, piv = self.rref()
        n = self.ncols
        free = [j for j in range(n) if j not in piv]
        basis = []
        for f in free:
            v = [ZERO] * n
            v[f] = ONE
            for i, p in enumerate(piv):
                v[p] = -R.rows[i][f]
            basis.append(tuple(v))
        return basis

    def det(self) -> GQ:
        if self.nrows != self.ncols:
            raise DimensionError("det of non-square matrix")
        n = self.nrows
        a = [list(r) for r in self.rows]
        d = ONE
        for c in range(n):
            p = next((r for r in range(c, n) if a[r][c]), None)
            if p is None:
                return ZERO
            if p != c:
                a[c], a[p] = a[p], a[c]
                d = -d
            d = d * a[c][c]
            inv = ONE / a[c][c]
            for r in range(c + 1, n):
                if a[r][c]:
                    f = a[r][c] * inv
                    a[r] = [x - f * y for x, y in zip(a[r], a[c])]
        return d

    def inverse(self) -> "Matrix":
        n = self.nrows
        if n != self.ncols:
            raise DimensionError("inverse of non-square matrix")
        aug = [list(r) + [ONE if i == j else ZERO for j in range(n)] for i, r in enumerate(self.rows)]
        R, piv = _rref_rows(aug, 2 * n)
        if tuple(piv[:n]) != tuple(range(n)) or len([p for p in piv if p < n]) != n:
            raise ZeroDivisionError("singular matrix")
        return Matrix._raw(tuple(r[n:] for r in R.rows[:n]), n)

    def solve(self, b: Sequence) -> tuple | None:
        """One solution x of self @ x = b (free variables zero), or None."""
        b = [GQ.coerce(x) for x in b]
        aug = [list(r) + [bi] for r, bi in zip(self.rows, b)]
        R, piv = _rref_rows(aug, self.ncols + 1)
        if self.ncols in piv:
            return None
        x = [ZERO] * self.ncols
        for i, p in enumerate(piv):
            x[p] = R.rows[i][self.ncols]
        return tuple(x)


def _rref_rows(rows: list[list[GQ]], ncols: int) -> tuple[Matrix, tuple[int, ...]]:
    piv = []
    r = 0
    nr = len(rows)
    for c in range(ncols):
        if r == nr:
            break
        p = next((i for i in range(r, nr) if rows[i][c]), None)
        if p is None:
            continue
        rows[r], rows[p] = rows[p], rows[r]
        pv = rows[r][c]
        if pv != ONE:
            inv = ONE / pv
            rows[r] = [x * inv if x else x for x in rows[r]]
        prow = rows[r]
        nzc = [k for k in range(c, ncols) if prow[k]]
        for i in range(nr):
            if i != r and rows[i][c]:
                f = rows[i][c]
                ri = rows[i][:]
                for k in nzc:
                    ri[k] = ri[k] - f * prow[k]
                rows[i] = ri
        piv.append(c)
        r += 1
    return Matrix._raw(tuple(tuple(x) for x in rows[:r]), ncols), tuple(piv)


def dot(u: Sequence[GQ], v: Sequence[GQ]) -> GQ:
    s = ZERO
    for a, b in zip(u, v):
        if a and b:
            s = s + a * b
    return s


def vec(xs: Iterable) -> tuple:
    return tuple(GQ.coerce(x) for x in xs)


def vadd(u, v):
    return tuple(a + b for a, b in zip(u, v))


def vsub(u, v):
    return tuple(a - b for a, b in zip(u, v))


def vscale(c, u):
    c = GQ.coerce(c)
    return tuple(c * a for a in u)


def vconj(u):
    return tuple(a.conjugate() for a in u)


def is_zero_vec(u) -> bool:
    return all(not a for a in u)


def bilinear(Q: Matrix, u: Sequence, v: Sequence) -> GQ:
    """u^T Q v (bilinear, no conjugation)."""
    return dot(u, Q @ v)


def exp_nilpotent(X: Matrix) -> Matrix:
    """exp(X) for nilpotent X as a finite sum; raises if X is not nilpotent."""
    n = X.nrows
    out = Matrix.identity(n)
    term = Matrix.identity(n)
    for k in range(1, n + 1):
        term = (term @ X).scale(Fraction(1, k))
        if term.is_zero():
            return out
        out = out + term
    if not (term @ X).is_zero():
        raise ValueError("matrix is not nilpotent")
    return out


def is_nilpotent(X: Matrix) -> bool:
    return X.power(X.nrows).is_zero()


def commutator(A: Matrix, B: Matrix) -> Matrix:
    return A @ B - B @ A


# ---------------------------------------------------------------------------
# subspaces


class Subspace:
    """Subspace of Q(i)^n stored by its canonical RREF row basis."""

    __slots__ = ("basis", "dim", "ambient")

    def __init__(self, vectors: Iterable[Sequence], ambient: int):
        rows = [[GQ.coerce(x) for x in v] for v in vectors]
        for r in rows:
            if len(r) != ambient:
                raise DimensionError("vector length does not match ambient dimension")
        R, _ = _rref_rows(rows, ambient) if rows else (Matrix.zeros(0, ambient), ())
        self.basis = R.rows
        self.dim = len(R.rows)
        self.ambient = ambient

    @classmethod
    def zero(cls, n: int) -> "Subspace":
        return cls([], n)

    @classmethod
    def full(cls, n: int) -> "Subspace":
        return cls(Matrix.identity(n).rows, n)

    @classmethod
    def span(cls, vectors: Sequence[Sequence], ambient: int | None = None) -> "Subspace":
        vectors = list(vectors)
        if ambient is None:
            ambient = len(vectors[0])
        return cls(vectors, ambient)

    def matrix(self) -> Matrix:
        """Basis vectors as rows."""
        return Matrix._raw(self.basis, self.ambient)

    def __eq__(self, o):
        return isinstance(o, Subspace) and self.ambient == o.ambient and self.basis == o.basis

    def __hash__(self):
        return hash((self.ambient, self.basis))

    def __repr__(self):
        return f"Subspace(dim={self.dim}, basis={[list(b) for b in self.basis]})"

    def annihilator(self) -> list[tuple]:
        """Vectors y with sum_i y_i v_i = 0 for all v in the subspace."""
        if self.dim == 0:
            return [tuple(ONE if i == j else ZERO for j in range(self.ambient)) for i in range(self.ambient)]
        return self.matrix().nullspace()

    def contains(self, v: Sequence) -> bool:
        v = vec(v)
        if self.dim == 0:
            return is_zero_vec(v)
        R = self.basis
        # reduce v by the RREF basis
        piv = [next(j for j, x in enumerate(r) if x) for r in R]
        for r, p in zip(R, piv):
            if v[p]:
                f = v[p]
                v = tuple(a - f * b for a, b in zip(v, r))
        return is_zero_vec(v)

    def contains_space(self, o: "Subspace") -> bool:
        return all(self.contains(b) for b in o.basis)

    def coordinates(self, v: Sequence) -> tuple | None:
        """Coefficients of v in the stored basis, or None if v is not contained."""
        if self.dim == 0:
            return () if is_zero_vec(vec(v)) else None
        return self.matrix().transpose().solve(v)

    def is_real(self) -> bool:
        return all(not x.im for r in self.basis for x in r)


def _check(A: Subspace, B: Subspace):
    if A.ambient != B.ambient:
        raise DimensionError("subspaces live in different ambient spaces")


def intersect(A: Subspace, B: Subspace) -> Subspace:
    _check(A, B)
    if A.dim == 0 or B.dim == 0:
        return Subspace.zero(A.ambient)
    if A.dim == A.ambient:
        return B
    if B.dim == B.ambient:
        return A
    ann = A.annihilator() + B.annihilator()
    return Subspace(Matrix(ann, A.ambient).nullspace(), A.ambient)


def ssum(A: Subspace, B: Subspace) -> Subspace:
    _check(A, B)
    return Subspace(list(A.basis) + list(B.basis), A.ambient)


def conjugate(A: Subspace) -> Subspace:
    return Subspace([vconj(b) for b in A.basis], A.ambient)


def image(M: Matrix, A: Subspace) -> Subspace:
    if M.ncols != A.ambient:
        raise DimensionError("matrix does not act on this subspace")
    return Subspace([M @ b for b in A.basis], M.nrows)


def preimage(M: Matrix, B: Subspace) -> Subspace:
    """{v : M v in B}."""
    if M.nrows != B.ambient:
        raise DimensionError("matrix target does not match subspace")
    ann = B.annihilator()
    if not ann:
        return Subspace.full(M.ncols)
    return Subspace((Matrix(ann, B.ambient) @ M).nullspace(), M.ncols)


def kernel(M: Matrix) -> Subspace:
    return Subspace(M.nullspace(), M.ncols)


def subspace_algebra(op: str, A: Subspace, B=None) -> Subspace:
    """Dispatch for the four subspace operations."""
    if op == "intersect":
        return intersect(A, B)
    if op == "sum":
        return ssum(A, B)
    if op == "conjugate":
        if not isinstance(A, Subspace):
            raise LayerError("conjugate needs an exact subspace")
        return conjugate(A)
    if op == "apply":
        return image(B, A)
    raise ValueError(f"unknown subspace operation {op!r}")


def complement_basis(big: Subspace, small: Subspace) -> list[tuple]:
    """Vectors of `big` completing a basis of `small` (lifts of a quotient basis)."""
    cur = small
    out = []
    for b in big.basis:
        if not cur.contains(b):
            out.append(b)
            cur = ssum(cur, Subspace([b], big.ambient))
    return out


def direct_sum_check(parts: Sequence[Subspace], total: Subspace) -> bool:
    """True iff the parts are independent and sum to `total`."""
    n = total.ambient
    vecs = [b for p in parts for b in p.basis]
    if len(vecs) != total.dim:
        return False
    S = Subspace(vecs, n)
    return S.dim == total.dim and S == total


def projectors(parts: Sequence[Subspace]) -> list[Matrix]:
    """Projections onto each part for a direct sum decomposition of the ambient space."""
    n = parts[0].ambient
    cols = [b for p in parts for b in p.basis]
    if len(cols) != n:
        raise ValueError("parts do not form a direct sum decomposition")
    B = Matrix.from_columns(cols)
    Binv = B.inverse()
    out = []
    k = 0
    for p in parts:
        sel = [ONE if k <= i < k + p.dim else ZERO for i in range(n)]
        D = Matrix.diag(sel)
        out.append(B @ D @ Binv)
        k += p.dim
    return out


# ---------------------------------------------------------------------------
# integer lattices


def _int_matrix(M) -> list[list[int]]:
    if isinstance(M, Matrix):
        out = []
        for r in M.rows:
            row = []
            for x in r:
                if x.im or x.re.denominator != 1:
                    raise ValueError("matrix is not integral")
                row.append(int(x.re))
            out.append(row)
        return out
    return [[int(x) for x in r] for r in M]


def clear_denominators(rows: Sequence[Sequence]) -> list[list[int]]:
    """Scale each row of a rational matrix to a primitive integer row."""
    out = []
    for r in rows:
        fr = []
        for x in r:
            x = GQ.coerce(x) if not isinstance(x, Fraction) else GQ(x)
            if x.im:
                raise ValueError("real entries expected")
            fr.append(x.re)
        den = 1
        for x in fr:
            den = den * x.denominator // math.gcd(den, x.denominator)
        ints = [int(x * den) for x in fr]
        g = 0
        for v in ints:
            g = math.gcd(g, v)
        out.append([v // g for v in ints] if g > 1 else ints)
    return out


def hermite_rows(rows: Sequence[Sequence[int]], ncols: int) -> list[list[int]]:
    """Row-style Hermite normal form: echelon, positive pivots, 0 <= entries above a pivot < pivot."""
    a = [list(map(int, r)) for r in rows]
    m = len(a)
    r = 0
    pivots = []
    for c in range(ncols):
        if r >= m:
            break
        # gcd-combine rows r.. on column c
        while True:
            nz = [i for i in range(r, m) if a[i][c]]
            if not nz:
                break
            p = min(nz, key=lambda i: abs(a[i][c]))
            a[r], a[p] = a[p], a[r]
            done = True
            for i in range(r + 1, m):
                if a[i][c]:
                    q = a[i][c] // a[r][c]
                    a[i] = [x - q * y for x, y in zip(a[i], a[r])]
                    if a[i][c]:
                        done = False
            if done:
                break
        if not any(a[i][c] for i in range(r, m)):
            continue
        if a[r][c] < 0:
            a[r] = [-x for x in a[r]]
        for i in range(r):
            q = a[i][c] // a[r][c]
            if q:
                a[i] = [x - q * y for x, y in zip(a[i], a[r])]
        pivots.append(c)
        r += 1
    return [row for row in a[:r]]


def smith_diagonal(rows: Sequence[Sequence[int]]) -> list[int]:
    """Invariant factors of an integer matrix (nonzero ones, in order)."""
    a = [list(map(int, r)) for r in rows]
    m = len(a)
    n = len(a[0]) if m else 0
    diag = []
    t = 0
    while t < min(m, n):
        nz = [(abs(a[i][j]), i, j) for i in range(t, m) for j in range(t, n) if a[i][j]]
        if not nz:
            break
        _, pi, pj = min(nz)
        a[t], a[pi] = a[pi], a[t]
        for row in a:
            row[t], row[pj] = row[pj], row[t]
        while True:
            changed = False
            for i in range(t + 1, m):
                if a[i][t]:
                    q = a[i][t] // a[t][t]
                    a[i] = [x - q * y for x, y in zip(a[i], a[t])]
                    if a[i][t]:
                        changed = True
            for j in range(t + 1, n):
                if a[t][j]:
                    q = a[t][j] // a[t][t]
                    for row in a:
                        row[j] -= q * row[t]
                    if a[t][j]:
                        changed = True
            if changed:
                nz = [(abs(a[i][j]), i, j) for i in range(t, m) for j in range(t, n) if a[i][j] and (i == t or j == t)]
                _, pi, pj = min(nz)
                a[t], a[pi] = a[pi], a[t]
                for row in a:
                    row[t], row[pj] = row[pj], row[t]
                continue
            # divisibility condition
            bad = next(((i, j) for i in range(t + 1, m) for j in range(t + 1, n) if a[i][j] % a[t][t]), None)
            if bad is None:
                break
            a[t] = [x + y for x, y in zip(a[t], a[bad[0]])]
        diag.append(abs(a[t][t]))
        t += 1
    return diag


@dataclass(frozen=True)
class IntLattice:
    """Saturated subgroup of Z^n; `basis` holds generators in canonical Hermite form."""

    ambient: int
    basis: tuple[tuple[int, ...], ...]  # generators (each a vector of length ambient)

    @property
    def rank(self) -> int:
        return len(self.basis)

    def matrix_columns(self) -> list[list[int]]:
        """n x rank integer matrix with the generators as columns."""
        return [[g[i] for g in self.basis] for i in range(self.ambient)]

    def contains(self, v: Sequence[int]) -> bool:
        if not self.basis:
            return all(x == 0 for x in v)
        sol = Matrix.from_columns(self.basis).solve(v)
        if sol is None:
            return False
        return all(x.re.denominator == 1 and not x.im for x in sol)

    def to_json(self):
        return {"ambient": self.ambient, "basis": [list(g) for g in self.basis]}


def canonical_lattice(generators: Sequence[Sequence[int]], n: int) -> IntLattice:
    H = hermite_rows(generators, n) if generators else []
    return IntLattice(n, tuple(tuple(r) for r in H))


def is_saturated(generators: Sequence[Sequence[int]], n: int) -> bool:
    if not generators:
        return True
    cols = [[g[i] for g in generators] for i in range(n)]
    d = smith_diagonal(cols)
    return len(d) == len(generators) and all(x == 1 for x in d)


def kernel_lattice(M) -> IntLattice:
    """Saturated integer kernel {a in Z^n : M a = 0} of a rational matrix."""
    if isinstance(M, Matrix):
        n = M.ncols
        rows = M.rows
    else:
        rows = [list(r) for r in M]
        n = len(rows[0]) if rows else 0
    rows = [r for r in rows if any(GQ.coerce(x) for x in r)] if rows else []
    if not rows:
        return canonical_lattice([[1 if i == j else 0 for j in range(n)] for i in range(n)], n)
    ints = clear_denominators(rows)
    # column reduction of ints with a unimodular transform U: ints @ U = [H | 0]
    m = len(ints)
    a = [row[:] for row in ints]
    U = [[1 if i == j else 0 for j in range(n)] for i in range(n)]
    col = 0
    for r in range(m):
        if col >= n:
            break
        while True:
            nz = [j for j in range(col, n) if a[r][j]]
            if not nz:
                break
            p = min(nz, key=lambda j: abs(a[r][j]))
            for row in a:
                row[col], row[p] = row[p], row[col]
            for row in U:
                row[col], row[p] = row[p], row[col]
            done = True
            for j in range(col + 1, n):
                if a[r][j]:
                    q = a[r][j] // a[r][col]
                    for row in a:
                        row[j] -= q * row[col]
                    for row in U:
                        row[j] -= q * row[col]
                    if a[r][j]:
                        done = False
            if done:
                break
        if any(a[r][j] for j in range(col, n)):
            col += 1
    gens = [[U[i][j] for i in range(n)] for j in range(col, n)]
    return canonical_lattice(gens, n)


def saturation_witness(generators: Sequence[Sequence[int]], n: int) -> tuple[int, ...] | None:
    """An integral vector of Q*L not in L, or None when L is saturated."""
    if is_saturated(generators, n):
        return None
    ann = Matrix(
        [list(v) for v in Matrix.from_columns([list(g) for g in generators]).transpose().nullspace()]
        or [[0] * n],
        n,
    ) if generators else Matrix.identity(n)
    sat = kernel_lattice(ann)
    L = canonical_lattice(generators, n)
    Lfull = IntLattice(n, L.basis)
    for g in sat.basis:
        if not Lfull.contains(g):
            return g
    return None


def _int_det(a: list[list[int]]) -> int:
    d = Matrix(a).det()
    return int(d.re)


def unimodular_completion(L: IntLattice | Sequence[Sequence[int]], n: int | None = None) -> list[list[int]]:
    """A in SL_n(Z) whose last rank(L) columns are exactly the generators of L."""
    if not isinstance(L, IntLattice):
        gens = [tuple(int(x) for x in g) for g in L]
        if n is None:
            n = len(gens[0])
        basis = gens
    else:
        n = L.ambient
        basis = list(L.basis)
    k = len(basis)
    if k and not is_saturated(basis, n):
        w = saturation_witness(basis, n)
        raise ValueError(f"lattice is not saturated; witness {w}")
    if k == 0:
        return [[1 if i == j else 0 for j in range(n)] for i in range(n)]
    if k == n and [list(r) for r in zip(*basis)] == [[1 if i == j else 0 for j in range(n)] for i in range(n)]:
        return [[1 if i == j else 0 for j in range(n)] for i in range(n)]
    # column-reduce B^T (k x n) with unimodular V: B^T V = [H | 0]
    a = [list(g) for g in basis]
    V = [[1 if i == j else 0 for j in range(n)] for i in range(n)]
    col = 0
    for r in range(k):
        while True:
            nz = [j for j in range(col, n) if a[r][j]]
            if not nz:
                break
            p = min(nz, key=lambda j: abs(a[r][j]))
            for row in a:
                row[col], row[p] = row[p], row[col]
            for row in V:
                row[col], row[p] = row[p], row[col]
            done = True
            for j in range(col + 1, n):
                if a[r][j]:
                    q = a[r][j] // a[r][col]
                    for row in a:
                        row[j] -= q * row[col]
                    for row in V:
                        row[j] -= q * row[col]
                    if a[r][j]:
                        done = False
            if done:
                break
        col += 1
    Vinv = Matrix(V).inverse()
    C = [[int(x.re) for x in r] for r in Vinv.transpose().rows]  # C = V^{-T}
    comp = [[C[i][j] for j in range(k, n)] for i in range(n)]
    A = [comp[i] + [basis[j][i] for j in range(k)] for i in range(n)]
    d = _int_det(A)
    if d == -1:
        for i in range(n):
            A[i][0] = -A[i][0]
    elif d != 1:
        raise ArithmeticError("completion failed; lattice not saturated")
    return A


# ---------------------------------------------------------------------------
# binomial ideals


@dataclass(frozen=True)
class Binomial:
    """s^plus - s^minus, recorded together with its lattice vector u = plus - minus."""

    u: tuple[int, ...]

    @property
    def plus(self):
        return tuple(max(x, 0) for x in self.u)

    @property
    def minus(self):
        return tuple(max(-x, 0) for x in self.u)

    @property
    def degree(self):
        return max(sum(self.plus), sum(self.minus))

    def evaluate(self, s: Sequence):
        p = 1
        q = 1
        for x, a, b in zip(s, self.plus, self.minus):
            if a:
                p = p * x**a
            if b:
                q = q * x**b
        return p - q

    def monomials(self, s: Sequence):
        p = 1
        q = 1
        for x, a, b in zip(s, self.plus, self.minus):
            if a:
                p = p * x**a
            if b:
                q = q * x**b
        return p, q

    def __str__(self):
        def mono(e):
            parts = [f"s{i + 1}" + (f"^{k}" if k > 1 else "") for i, k in enumerate(e) if k]
            return "*".join(parts) if parts else "1"

        return f"{mono(self.plus)} - {mono(self.minus)}"

    def to_json(self):
        return {"u": list(self.u), "plus": list(self.plus), "minus": list(self.minus), "text": str(self)}


def _normalize_u(u: Sequence[int]) -> tuple[int, ...]:
    u = tuple(int(x) for x in u)
    for x in u:
        if x:
            return u if x > 0 else tuple(-y for y in u)
    return u


@dataclass
class BinomialSystem:
    binomials: list[Binomial]
    status: str  # "exact" or "torus-exact, boundary-superset"
    degree_used: int
    lattice: IntLattice = field(default=None)

    def to_json(self):
        return {
            "status": self.status,
            "degree_used": self.degree_used,
            "binomials": [b.to_json() for b in self.binomials],
        }


def _admissible_support(E: list[list[int]], S: frozenset) -> bool:
    """Does the closure of t -> t^E meet the stratum {s_i != 0 iff i in S}?"""
    from scipy.optimize import linprog

    n = len(E)
    c = len(E[0]) if n else 0
    if len(S) == n:
        return True
    if c == 0:
        return False
    A_eq = [E[i] for i in S] or None
    b_eq = [0] * len(S) if S else None
    A_ub = [[-x for x in E[i]] for i in range(n) if i not in S]
    b_ub = [-1] * len(A_ub)
    res = linprog(
        [0] * c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, bounds=[(None, None)] * c, method="highs"
    )
    return res.status == 0


def _stratum_lattice(gens: Sequence[Binomial], S: frozenset, n: int):
    """Restriction of the binomial system to the stratum with support S.

    Returns None if the system has no zero there, else the integer lattice of
    characters that the system forces to be 1.
    """
    vecs = []
    for b in gens:
        p_in = all(i in S for i, x in enumerate(b.plus) if x)
        m_in = all(i in S for i, x in enumerate(b.minus) if x)
        if p_in != m_in:
            return None
        if p_in:
            vecs.append([b.u[i] for i in sorted(S)])
    return vecs


def _same_lattice(A: list[list[int]], B: list[list[int]], k: int) -> bool:
    ha = hermite_rows(A, k) if A else []
    hb = hermite_rows(B, k) if B else []
    return ha == hb


def _lattice_vectors_of_degree(Lbasis: list[tuple[int, ...]], E: list[list[int]], n: int, d: int):
    """All normalized u in L with max(|u+|,|u-|) == d."""
    out = []
    Et = list(zip(*E)) if E and E[0] else []

    def rec(i, pos, neg, cur):
        if i == n:
            if max(pos, neg) != d:
                return
            u = tuple(cur)
            if not any(u):
                return
            if all(sum(e * x for e, x in zip(col, u)) == 0 for col in Et):
                nu = _normalize_u(u)
                if nu == u:
                    out.append(u)
            return
        for x in range(-(d - neg), d - pos + 1):
            cur.append(x)
            rec(i + 1, pos + max(x, 0), neg + max(-x, 0), cur)
            cur.pop()

    rec(0, 0, 0, [])
    return out


def lattice_ideal_binomials(E, degree_cap: int = 8) -> BinomialSystem:
    """Binomials cutting out the closure of the monomial map t -> (t^{E_1}, ..., t^{E_n}).

    Starts from a lattice basis of {u : u^T E = 0} and adds all binomials of
    increasing degree until every boundary stratum of the zero set agrees with
    the closure (checked stratum by stratum), or until `degree_cap`.
    """
    E = _int_matrix(E)
    n = len(E)
    c = len(E[0]) if n else 0
    if c == 0:
        M = [[0] * n]
    else:
        M = [[E[i][j] for i in range(n)] for j in range(c)]
    L = kernel_lattice(M) if n else IntLattice(0, ())
    gens = [Binomial(_normalize_u(g)) for g in L.basis]
    if not gens:
        return BinomialSystem([], "exact", 0, L)

    supports = [frozenset(S) for k in range(n + 1) for S in itertools.combinations(range(n), k)]
    target = {}
    for S in supports:
        if _admissible_support(E, S):
            Ls = kernel_lattice([[E[i][j] for i in sorted(S)] for j in range(c)]) if S else IntLattice(0, ())
            target[S] = [list(g) for g in Ls.basis] if S else []
        else:
            target[S] = None

    def certified(gs):
        for S in supports:
            got = _stratum_lattice(gs, S, n)
            want = target[S]
            if (got is None) != (want is None):
                return False
            if got is not None and not _same_lattice(got, want, len(S)):
                return False
        return True

    seen = {b.u for b in gens}
    current = list(gens)
    if certified(current):
        return BinomialSystem(current, "exact", max(b.degree for b in current), L)
    for d in range(1, degree_cap + 1):
        for u in _lattice_vectors_of_degree(list(L.basis), E, n, d):
            if u not in seen:
                seen.add(u)
                current.append(Binomial(u))
        if certified(current):
            return BinomialSystem(current, "exact", d, L)
    return BinomialSystem(current, "torus-exact, boundary-superset", degree_cap, L)
