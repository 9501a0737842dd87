"""Random test data: polarized Hodge structures, nilpotent orbits, R-split
limits and degeneration runs that satisfy the boundedness hypothesis.

Everything is exact (Gaussian rationals) and driven by a numpy Generator so
runs are reproducible from a seed.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .exact_core import GQ, Matrix, bilinear, kernel, vec
from .filtrations import MixedHodgeData, deligne_splitting
from .hodge_core import HodgeFiltration, PolarizedLattice, PureHodgeStructure, _sign, validate_polarized_hs
from .orbits import PeriodNormalForm, evaluate_nilpotent_exact, shift_filtration

I = GQ(0, 1)


def _rng(seed):
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def _frac(rng, lo=-2, hi=2, den=3) -> Fraction:
    return Fraction(int(rng.integers(lo * den, hi * den + 1)), den)


def random_unimodular(rng, n: int, steps: int | None = None) -> Matrix:
    """Product of random elementary integer matrices (determinant +-1)."""
    rng = _rng(rng)
    U = [[int(i == j) for j in range(n)] for i in range(n)]
    for _ in range(steps if steps is not None else 2 * n):
        if n < 2:
            break
        i, j = rng.choice(n, 2, replace=False)
        c = int(rng.integers(-1, 2))
        for r in range(n):
            U[r][i] += c * U[r][j]
    if rng.random() < 0.5:
        U = [[-x if c == 0 else x for c, x in enumerate(row)] for row in U]
    return Matrix(U)


def cayley_isometry(rng, Q: Matrix) -> Matrix:
    """(I - X)^-1 (I + X) for a random rational X in so(Q); a rational isometry of Q."""
    rng = _rng(rng)
    n = Q.nrows
    S = [[Fraction(0)] * n for _ in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            x = _frac(rng, -1, 1, 2)
            S[i][j], S[j][i] = x, -x
    X = Q.inverse() @ Matrix(S)
    Id = Matrix.identity(n)
    M = Id - X
    if not M.det():
        return Id
    return M.inverse() @ (Id + X)


@dataclass
class Conjugated:
    """Data written in the basis U: Q' = U^T Q U, vectors v' = U^-1 v, operators U^-1 X U."""

    U: Matrix
    Uinv: Matrix

    def form(self, Q: Matrix) -> Matrix:
        return self.U.transpose() @ Q @ self.U

    def vector(self, v) -> tuple:
        return self.Uinv.apply(v)

    def operator(self, X: Matrix) -> Matrix:
        return self.Uinv @ X @ self.U

    def filtration(self, F: HodgeFiltration) -> HodgeFiltration:
        return HodgeFiltration({p: [self.vector(b) for b in S.basis] for p, S in F.levels().items()}, F.ambient)


def _change(U: Matrix) -> Conjugated:
    return Conjugated(U, U.inverse())


def random_hodge_numbers(rng, rank: int, max_p: int = 2) -> dict[int, int]:
    """Symmetric weight-zero Hodge numbers summing to rank."""
    rng = _rng(rng)
    h = {0: rank}
    for _ in range(rank):
        if h[0] < 2:
            break
        if rng.random() < 0.5:
            p = int(rng.integers(1, max_p + 1))
            h[0] -= 2
            h[p] = h.get(p, 0) + 1
            h[-p] = h.get(-p, 0) + 1
    return {p: k for p, k in sorted(h.items()) if k}


def block_model(hodge: dict[int, int], scales=None) -> tuple[Matrix, HodgeFiltration]:
    """Diagonal Q and F built from the Hodge numbers: a pair of real basis
    vectors (u, v) with Q(u,u) = Q(v,v) = sign(p) c per H^{p,-p} + H^{-p,p},
    H^{p,-p} spanned by u + i v, and one vector per H^{0,0}."""
    diag = []
    pieces: dict[int, list] = {}
    idx = 0
    n = sum(hodge.values())
    scales = list(scales) if scales else []

    def e(k):
        return [GQ(int(j == k)) for j in range(n)]

    for p in sorted(hodge):
        if p < 0:
            continue
        for _ in range(hodge[p] if p == 0 else hodge[p]):
            c = scales.pop() if scales else Fraction(1)
            if p == 0:
                diag.append(c)
                pieces.setdefault(0, []).append(e(idx))
                idx += 1
            else:
                diag += [c * _sign(p), c * _sign(p)]
                u, v = e(idx), e(idx + 1)
                pieces.setdefault(p, []).append([a + I * b for a, b in zip(u, v)])
                pieces.setdefault(-p, []).append([a - I * b for a, b in zip(u, v)])
                idx += 2
    Q = Matrix.diag(diag)
    levels = {}
    for p in sorted(pieces):
        levels[p] = [b for q in pieces if q >= p for b in pieces[q]]
    return Q, HodgeFiltration(levels, n)


def random_polarized_hs(seed=None, rank: int | None = None, max_p: int = 2) -> PureHodgeStructure:
    """Block model, then a Cayley isometry, then an integral change of basis."""
    rng = _rng(seed)
    rank = rank or int(rng.integers(1, 7))
    if not 1 <= rank <= 6:
        raise ValueError("rank must be between 1 and 6")
    hodge = random_hodge_numbers(rng, rank, max_p)
    scales = [Fraction(int(rng.integers(1, 4))) for _ in range(rank)]
    Q, F = block_model(hodge, scales)
    g = cayley_isometry(rng, Q)
    F = HodgeFiltration({p: [g.apply(b) for b in S.basis] for p, S in F.levels().items()}, rank)
    C = _change(random_unimodular(rng, rank))
    hs = validate_polarized_hs(PolarizedLattice(C.form(Q)), C.filtration(F))
    if not isinstance(hs, PureHodgeStructure):  # pragma: no cover - construction is polarized
        raise AssertionError(f"block model failed to polarize: {hs.message}")
    return hs


# ---------------------------------------------------------------------------
# sl2 tensor models


def sl2_block(a: int) -> tuple[Matrix, Matrix, list]:
    """Sym^a model: N e_i = e_{i+1}, Q(e_i, e_j) = (-1)^i [i + j = a]; e_i has type (a/2 - i)."""
    n = a + 1
    N = Matrix([[int(i == j + 1) for j in range(n)] for i in range(n)])
    Q = Matrix([[(-1) ** i if i + j == a else 0 for j in range(n)] for i in range(n)])
    types = [Fraction(a, 2) - i for i in range(n)]
    return N, Q, types


def _kron(A: Matrix, B: Matrix) -> Matrix:
    return Matrix(np.kron(np.array(A.rows, dtype=object), np.array(B.rows, dtype=object)).tolist())


def _block_diag(A: Matrix, B: Matrix) -> Matrix:
    n, m = A.nrows, B.nrows
    rows = [list(r) + [GQ(0)] * m for r in A.rows] + [[GQ(0)] * n + list(r) for r in B.rows]
    return Matrix(rows)


@dataclass
class OrbitModel:
    P: PeriodNormalForm
    types: list  # Hodge type p of every reference basis vector before the lattice change
    dims: tuple


def _orbit_from(Q: Matrix, Ns: list, types: list, extra: PureHodgeStructure | None, rng) -> OrbitModel | None:
    n = Q.nrows
    levels = {}
    ps = sorted(set(int(t) for t in types))
    for p in ps:
        levels[p] = [[GQ(int(j == k)) for j in range(n)] for k, t in enumerate(types) if t >= p]
    F = HodgeFiltration(levels, n)
    if extra is not None:
        m = extra.rank
        Q = _block_diag(Q, extra.lattice.Q)
        Ns = [_block_diag(M, Matrix.zeros(m, m)) for M in Ns]
        lo = min(F.range()[0], extra.filtration.range()[0])
        hi = max(F.range()[1], extra.filtration.range()[1])
        levels = {}
        for p in range(lo, hi + 1):
            left = [list(b) + [GQ(0)] * m for b in F.basis(p)]
            right = [[GQ(0)] * n + list(b) for b in extra.filtration.basis(p)]
            levels[p] = left + right
        F = HodgeFiltration(levels, n + m)
        n += m
    C = _change(random_unimodular(rng, n))
    for sign in (1, -1):
        Qs = C.form(Q).scale(sign)
        P = PeriodNormalForm(PolarizedLattice(Qs), C.filtration(F), [C.operator(M) for M in Ns], name="synthetic")
        hs = validate_polarized_hs(P.lattice, evaluate_nilpotent_exact(P, [I] * P.n))
        if isinstance(hs, PureHodgeStructure):
            return OrbitModel(P, types, ())
    return None


def random_nilpotent_orbit(seed=None, max_rank: int = 6, variables: int | None = None, pure_part: bool | None = None) -> OrbitModel:
    """A polarized nilpotent orbit from Sym^a (x) Sym^b with N_1 = N (x) 1 and
    N_2 = 1 (x) N (one variable: Sym^a alone), optionally plus a pure summand
    with trivial monodromy, in a random integral basis."""
    rng = _rng(seed)
    for _ in range(100):
        d = variables or int(rng.integers(1, 3))
        if d == 1:
            a = int(rng.choice([0, 2, 4]))
            N, Q, types = sl2_block(a)
            Ns = [N]
            dims = (a + 1,)
        else:
            parity = int(rng.integers(0, 2))
            a, b = (int(x) for x in rng.choice([1, 3] if parity else [0, 2], 2))
            if (a + 1) * (b + 1) > max_rank:
                a = b = 1 if parity else 0
                if (a + 1) * (b + 1) > max_rank:
                    continue
            Na, Qa, ta = sl2_block(a)
            Nb, Qb, tb = sl2_block(b)
            Q = _kron(Qa, Qb)
            Ns = [_kron(Na, Matrix.identity(b + 1)), _kron(Matrix.identity(a + 1), Nb)]
            types = [x + y for x in ta for y in tb]
            dims = (a + 1, b + 1)
        room = max_rank - Q.nrows
        use_pure = pure_part if pure_part is not None else (room >= 1 and rng.random() < 0.5)
        extra = random_polarized_hs(rng, int(rng.integers(1, room + 1))) if use_pure and room >= 1 else None
        model = _orbit_from(Q, Ns, types, extra, rng)
        if model is not None:
            model.dims = dims
            return model
    raise RuntimeError("could not build a polarized nilpotent orbit")  # pragma: no cover


def random_r_split_mhs(seed=None, max_rank: int = 6) -> tuple[MixedHodgeData, OrbitModel, tuple]:
    """An R-split limit mixed Hodge structure (W(N), exp(xN) F) with real rational x.

    Returns (mhs, model, x). Real unipotent shifts keep the splitting real."""
    rng = _rng(seed)
    model = random_nilpotent_orbit(rng, max_rank)
    P = model.P
    x = tuple(_frac(rng, -1, 1, 4) for _ in range(P.n))
    M = deligne_splitting(P.weight(), shift_filtration(P, x))
    return M, model, x


# ---------------------------------------------------------------------------
# degeneration runs


@dataclass
class DegenerationRun:
    P: PeriodNormalForm
    A: list
    t_rule: list
    w_rule: list
    h_rule: list
    K: Fraction
    description: str = ""


def kernel_box(P: PeriodNormalForm, box: int = 2) -> list[tuple[int, ...]]:
    """Nonzero integral vectors of |entries| <= box in the common kernel of all N_j."""
    n = P.rank
    T = Matrix([list(r) for M in P.N for r in M.rows]) if P.n else Matrix.zeros(1, n)
    K = kernel(T)
    out = []
    for v in np.ndindex(*([2 * box + 1] * n)):
        w = tuple(int(x) - box for x in v)
        if any(w) and K.contains(vec(w)):
            out.append(w)
    return out


def random_degeneration_run(seed=None, model: OrbitModel | None = None, box: int = 1) -> DegenerationRun | None:
    """A constant integral h in ker T, t_k = c_k m with c_k in [1/2, 2], and a
    bounded real part w(m).  Uses single-variable or nested schedules."""
    rng = _rng(seed)
    model = model or random_nilpotent_orbit(rng, max_rank=4, variables=1)
    P = model.P
    cands = kernel_box(P, box)
    if not cands:
        return None
    h = cands[int(rng.integers(0, len(cands)))]
    c = [Fraction(int(rng.integers(2, 9)), 4) for _ in range(P.n)]
    x = [Fraction(int(rng.integers(-4, 5)), 8) for _ in range(P.n)]
    if P.n == 1:
        A = [["1"]]
        t_rule = [f"{c[0]}*m"]
    else:
        A = [[str(int(k >= j)) for k in range(P.n)] for j in range(P.n)]
        t_rule = [f"{c[k]}*m**{P.n - k}" for k in range(P.n)]
    w_rule = [f"{x[k]}*cos(m)" for k in range(P.n)]
    q = bilinear(P.lattice.Q, vec(h), vec(h)).re
    K = abs(q) + 1
    return DegenerationRun(P, A, t_rule, w_rule, [str(v) for v in h], K, "synthetic constant kernel class")


def flat_hodge_run(seed=None) -> DegenerationRun:
    """h(m) = h0 + k v on the rank-one trivial variation, k a fixed integer."""
    rng = _rng(seed)
    scale = int(rng.integers(1, 4))
    P = PeriodNormalForm(PolarizedLattice(Matrix([[scale]])), HodgeFiltration({0: [[1]]}, 1), [Matrix([[0]])])
    h0, k = int(rng.integers(-3, 4)), int(rng.integers(-2, 3))
    val = h0 + k
    c = Fraction(int(rng.integers(2, 9)), 4)
    return DegenerationRun(P, [["1"]], [f"{c}*m"], ["0"], [f"{h0} + {k}"], Fraction(scale * val * val + 1), "flat class")
