"""Period mappings in normal form Phi(z) = exp(sum z_j N_j) exp(Gamma(s)) F.

Gamma is a matrix polynomial in s_j = exp(2 pi i z_j). Structural checks
(horizontality, truncation, quotients) are exact; evaluation at points of the
upper half plane is done in complex floats.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import numeric
from .exact_core import (
    GQ,
    ZERO,
    Matrix,
    Subspace,
    commutator,
    complement_basis,
    exp_nilpotent,
    image,
    intersect,
    kernel_lattice,
    preimage,
    unimodular_completion,
    vec,
)
from .filtrations import (
    MixedHodgeData,
    WeightFiltration,
    check_commuting_nilpotent,
    cone_element,
    deligne_splitting,
    gpq_components,
    in_isometry_algebra,
    weight_filtration_of,
)
from .hodge_core import Diagnostic, HodgeFiltration, PolarizedLattice, validate_polarized_hs

TWO_PI_I = 2j * math.pi

# ---------------------------------------------------------------------------
# matrix polynomials: dict exponent tuple -> Matrix


def poly_mul(A: dict, B: dict) -> dict:
    out: dict = {}
    for ea, Ma in A.items():
        for eb, Mb in B.items():
            e = tuple(x + y for x, y in zip(ea, eb))
            P = Ma @ Mb
            out[e] = out[e] + P if e in out else P
    return {e: M for e, M in out.items() if not M.is_zero()}


def poly_add(A: dict, B: dict, sign: int = 1) -> dict:
    out = dict(A)
    for e, M in B.items():
        M = M if sign == 1 else -M
        out[e] = out[e] + M if e in out else M
    return {e: M for e, M in out.items() if not M.is_zero()}


def poly_exp(G: dict, n: int, nvars: int) -> dict:
    """exp of a nilpotent matrix polynomial without constant term."""
    one = {(0,) * nvars: Matrix.identity(n)}
    out = dict(one)
    term = dict(one)
    for k in range(1, n + 1):
        term = {e: M.scale(Fraction(1, k)) for e, M in poly_mul(term, G).items()}
        if not term:
            break
        out = poly_add(out, term)
    return out


# ---------------------------------------------------------------------------
# period data


class PeriodNormalForm:
    """Data (Q, F, N_1..N_n, Gamma) of a period mapping in normal form."""

    def __init__(
        self,
        lattice: PolarizedLattice,
        F: HodgeFiltration,
        N: Sequence,
        gamma: Sequence[tuple[Sequence[int], object]] = (),
        name: str = "",
        check: bool = True,
    ):
        self.lattice = lattice
        self.F = F
        self.N = [M if isinstance(M, Matrix) else Matrix(M) for M in N]
        self.n = len(self.N)
        self.rank = lattice.rank
        self.name = name
        g = {}
        for e, C in gamma:
            e = tuple(int(x) for x in e)
            if len(e) != self.n:
                raise ValueError(f"Gamma exponent {e} has wrong length (expected {self.n})")
            if any(x < 0 for x in e):
                raise ValueError("Gamma exponents must be nonnegative")
            if not any(e):
                raise ValueError("Gamma(0) must vanish: constant term present")
            C = C if isinstance(C, Matrix) else Matrix(C)
            g[e] = g[e] + C if e in g else C
        self.gamma = {e: C for e, C in g.items() if not C.is_zero()}
        if F.layer != "exact":
            raise ValueError("the reference filtration F must be exact")
        if check:
            self._check()
        self._Nf = np.array([M.to_numpy() for M in self.N]) if self.n else np.zeros((0, self.rank, self.rank))
        self._gf = [(np.array(e), C.to_numpy()) for e, C in sorted(self.gamma.items())]

    def _check(self):
        for M in self.N:
            if M.shape != (self.rank, self.rank):
                raise ValueError("monodromy logarithm has wrong shape")
        if self.n:
            check_commuting_nilpotent(self.N)
        for j, M in enumerate(self.N):
            if not in_isometry_algebra(M, self.lattice.Q):
                raise ValueError(f"N_{j + 1} is not infinitesimally Q-isometric")

    @property
    def integral_monodromy(self) -> bool:
        return not self.monodromy_integrality()

    def monodromy_integrality(self) -> list[int]:
        """Indices (1-based) j whose exp(N_j) does not preserve Z^rank."""
        bad = []
        for j, M in enumerate(self.N):
            E = exp_nilpotent(M)
            if any(x.im or x.re.denominator != 1 for r in E.rows for x in r):
                bad.append(j + 1)
        return bad

    # -- float evaluation -------------------------------------------------

    def s_of(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex).reshape(self.n)
        return np.exp(TWO_PI_I * z)

    def gamma_at(self, s) -> np.ndarray:
        G = np.zeros((self.rank, self.rank), dtype=complex)
        for e, C in self._gf:
            G = G + np.prod(np.power(s, e)) * C
        return G

    def zN(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex).reshape(self.n)
        if not self.n:
            return np.zeros((self.rank, self.rank), complex)
        return np.tensordot(z, self._Nf, axes=1)

    def g(self, z) -> np.ndarray:
        """exp(sum z_j N_j) exp(Gamma(s))."""
        return numeric.expm_nilpotent(self.zN(z)) @ numeric.expm_nilpotent(self.gamma_at(self.s_of(z)))

    def evaluate(self, z) -> "OrbitPoint":
        return evaluate_period(self, z)

    # -- exact data -------------------------------------------------------

    def monodromy_cone(self, coefficients=None) -> Matrix:
        if not self.n:
            return Matrix.zeros(self.rank, self.rank)
        return cone_element(self.N, coefficients)

    def weight(self, J: Sequence[int] | None = None, coefficients=None) -> WeightFiltration:
        """W(J) (all operators if J is None); indices 0-based."""
        J = range(self.n) if J is None else J
        ops = [self.N[j] for j in J]
        if not ops:
            return weight_filtration_of(Matrix.zeros(self.rank, self.rank))
        return weight_filtration_of(cone_element(ops, coefficients))

    def limit_mhs(self, w=None) -> MixedHodgeData | Diagnostic:
        """Deligne splitting of (W, exp(sum w_j N_j) F), exact w."""
        F = self.F if w is None else shift_filtration(self, w)
        return deligne_splitting(self.weight(), F)

    def replace(self, **kw) -> "PeriodNormalForm":
        args = dict(lattice=self.lattice, F=self.F, N=self.N, gamma=list(self.gamma.items()), name=self.name)
        args.update(kw)
        return PeriodNormalForm(check=False, **args)


def shift_filtration(P: PeriodNormalForm, w) -> HodgeFiltration:
    """exp(sum w_j N_j) F for exact w."""
    w = [GQ.coerce(x) for x in w]
    X = Matrix.zeros(P.rank, P.rank)
    for wj, Nj in zip(w, P.N):
        X = X + Nj.scale(wj)
    E = exp_nilpotent(X)
    return HodgeFiltration({p: [E @ b for b in S.basis] for p, S in P.F.levels().items()}, P.rank)


@dataclass
class OrbitPoint:
    z: np.ndarray
    s: np.ndarray
    F: HodgeFiltration
    g: np.ndarray

    def validate(self, P: PeriodNormalForm, tol: float = 1e-9):
        return validate_polarized_hs(P.lattice, self.F, tol)


def evaluate_period(P: PeriodNormalForm, z) -> OrbitPoint:
    z = np.asarray(z, dtype=complex).reshape(P.n)
    if np.any(z.imag <= 0):
        raise ValueError("evaluation point must lie in the upper half plane (Im z_j > 0)")
    g = P.g(z)
    levels = {}
    for p, S in P.F.levels().items():
        B = S.matrix().to_numpy() if S.dim else np.zeros((0, P.rank), complex)
        levels[p] = (g @ B.T).T if S.dim else B
    return OrbitPoint(z, P.s_of(z), HodgeFiltration(levels, P.rank, "float"), g)


def evaluate_nilpotent_exact(P: PeriodNormalForm, z) -> HodgeFiltration:
    """exp(sum z_j N_j) F for Gaussian-rational z; requires Gamma = 0."""
    if P.gamma:
        raise ValueError("exact evaluation needs Gamma = 0 (s is transcendental in z)")
    return shift_filtration(P, z)


# ---------------------------------------------------------------------------
# horizontality


@dataclass
class HorizontalityResult:
    passed: bool
    j: int | None = None
    monomial: tuple | None = None

    def to_json(self):
        return {"passed": self.passed, "j": self.j, "monomial": None if self.monomial is None else list(self.monomial)}


def horizontality_check(P: PeriodNormalForm) -> HorizontalityResult:
    """[N_j, exp(Gamma(s))] reduced modulo s_j must be the zero polynomial for every j."""
    if not P.gamma:
        return HorizontalityResult(True)
    E = poly_exp(P.gamma, P.rank, P.n)
    for j, Nj in enumerate(P.N):
        for e in sorted(E):
            if e[j] > 0:
                continue
            if not commutator(Nj, E[e]).is_zero():
                return HorizontalityResult(False, j + 1, e)
    return HorizontalityResult(True)


def is_nilpotent_in(P: PeriodNormalForm, J: Sequence[int]) -> bool:
    """Gamma does not involve s_j for j in J (0-based indices)."""
    return all(e[j] == 0 for e in P.gamma for j in J)


def truncate_gamma(P: PeriodNormalForm, J: Sequence[int]) -> PeriodNormalForm:
    """Set s_j = 0 in Gamma for j in J (0-based)."""
    J = list(J)
    kept = [(e, C) for e, C in P.gamma.items() if all(e[j] == 0 for j in J)]
    return P.replace(gamma=kept)


def truncation_defect(P: PeriodNormalForm, J: Sequence[int], z) -> float:
    """Operator norm of exp(zN)(exp(Gamma) exp(-Gamma_1) - id)exp(-zN)."""
    P1 = truncate_gamma(P, J)
    s = P.s_of(z)
    A = numeric.expm_nilpotent(P.zN(z))
    Ainv = numeric.expm_nilpotent(-P.zN(z))
    D = A @ numeric.expm_nilpotent(P.gamma_at(s)) @ numeric.expm_nilpotent(-P1.gamma_at(s)) @ Ainv
    return float(np.linalg.norm(D - np.eye(P.rank), 2))


# ---------------------------------------------------------------------------
# sections of the canonical extension and of F_{-1}M


@dataclass
class Section:
    P: PeriodNormalForm
    v: tuple
    kind: str
    k: int | None = None
    _vf: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        w = Matrix.from_columns([self.v], self.P.rank).to_numpy()[:, 0]
        if self.kind == "pole":
            w = self.P.N[self.k].to_numpy() @ w
        self._vf = w

    def __call__(self, z) -> np.ndarray:
        g = self.P.g(z)
        out = g @ self._vf
        if self.kind == "pole":
            out = out / self.P.s_of(z)[self.k]
        return out


def extension_sections(P: PeriodNormalForm, v, kind: str = "plain", k: int | None = None) -> Section:
    """sigma_v(z) = g(z) v, or sigma_{v,k}(z) = g(z) N_k v / s_k for v in F^2 (k 0-based)."""
    v = vec(v)
    if kind == "plain":
        return Section(P, v, "plain")
    if kind != "pole":
        raise ValueError("kind must be 'plain' or 'pole'")
    if k is None or not 0 <= k < P.n:
        raise ValueError("pole sections need an index 0 <= k < n")
    if not P.F.F(2).contains(v):
        raise ValueError("pole sections require v in F^2")
    return Section(P, v, "pole", k)


def gamma_minus_one(P: PeriodNormalForm, M: MixedHodgeData | None = None) -> dict:
    """The part of Gamma with bigraded components of type (-1, q)."""
    if not P.gamma:
        return {}
    M = P.limit_mhs() if M is None else M
    if isinstance(M, Diagnostic):
        raise ValueError(M.message)
    out = {}
    for e, C in P.gamma.items():
        parts = [X for (p, q), X in gpq_components(M, C).items() if p == -1]
        if parts:
            S = parts[0]
            for X in parts[1:]:
                S = S + X
            if not S.is_zero():
                out[e] = S
    return out


def derivative_identity_residual(P: PeriodNormalForm, v, k: int, z, step: float = 1e-5) -> float:
    """Relative residual of d sigma_v / d s_k = g (d Gamma_{-1}/d s_k) v + sigma_{v,k} / (2 pi i).

    The left side is computed by central differences in z_k and d/ds_k = (2 pi i s_k)^{-1} d/dz_k.
    """
    z = np.asarray(z, dtype=complex).reshape(P.n)
    sig = extension_sections(P, v)
    pole = extension_sections(P, v, "pole", k)
    dz = np.zeros(P.n, complex)
    dz[k] = step
    d_z = (sig(z + dz) - sig(z - dz)) / (2 * step)
    s = P.s_of(z)
    lhs = d_z / (TWO_PI_I * s[k])
    G1 = gamma_minus_one(P)
    dG = np.zeros((P.rank, P.rank), complex)
    for e, C in G1.items():
        if e[k] == 0:
            continue
        e2 = np.array(e)
        e2[k] -= 1
        dG = dG + e[k] * np.prod(np.power(s, e2)) * C.to_numpy()
    vf = sig._vf
    rhs = P.g(z) @ (dG @ vf) + pole(z) / TWO_PI_I
    return float(np.linalg.norm(lhs - rhs) / max(np.linalg.norm(rhs), 1e-300))


# ---------------------------------------------------------------------------
# the coordinate map (z, h) -> (s, Q(h, sigma_v), Q(h, sigma_{v,k}))


@dataclass
class EpsTilde:
    s: np.ndarray
    F1: np.ndarray
    pole: dict  # k (0-based) -> values over the F^2 basis

    def block_norms(self) -> dict:
        out = {"F1": float(np.linalg.norm(self.F1))}
        for k, v in sorted(self.pole.items()):
            out[f"pole{k + 1}"] = float(np.linalg.norm(v))
        return out

    def to_json(self):
        return {
            "s": [numeric.fmt_complex(x) for x in self.s],
            "F1": [numeric.fmt_complex(x) for x in self.F1],
            "pole": {str(k + 1): [numeric.fmt_complex(x) for x in v] for k, v in sorted(self.pole.items())},
        }


def epsilon_tilde(P: PeriodNormalForm, z, h) -> EpsTilde:
    z = np.asarray(z, dtype=complex).reshape(P.n)
    if np.any(z.imag <= 0):
        raise ValueError("evaluation point must lie in the upper half plane")
    hf = np.asarray([complex(x) for x in h], dtype=complex)
    Q = P.lattice.Q_float()
    g = P.g(z)
    s = P.s_of(z)
    row = hf @ Q @ g
    F1 = np.array([row @ Matrix.from_columns([b], P.rank).to_numpy()[:, 0] for b in P.F.basis(1)], dtype=complex)
    pole = {}
    F2 = P.F.basis(2)
    if F2:
        for k in range(P.n):
            Nk = P.N[k].to_numpy()
            nums = [row @ Nk @ Matrix.from_columns([b], P.rank).to_numpy()[:, 0] for b in F2]
            # s_k underflows far out; an exactly vanishing numerator stays zero
            with np.errstate(divide="ignore", invalid="ignore"):
                pole[k] = np.array([0j if x == 0 else x / s[k] for x in nums], dtype=complex)
    return EpsTilde(s, F1, pole)


# ---------------------------------------------------------------------------
# variations on gr^{W(J_1)}


@dataclass
class QuotientData:
    period: PeriodNormalForm
    ell: int
    twist: int
    lifts: list  # lifts in H of the integral basis of the quotient
    induced_N: list  # induced operators for every j (0-based), including j in J_1
    J1: list
    cone: list
    weight_filtration: WeightFiltration

    def coordinates(self, v) -> tuple:
        return _quotient_coords(self.lifts, self.weight_filtration.W(self.ell - 1), v)


def _quotient_coords(lifts, lower: Subspace, v):
    cols = list(lifts) + list(lower.basis)
    n = lower.ambient
    x = Matrix.from_columns(cols, n).solve(vec(v))
    if x is None:
        raise ValueError("vector does not lie in the filtration step")
    return tuple(x[: len(lifts)])


def _induced(X: Matrix, lifts, W: WeightFiltration, ell: int) -> Matrix:
    lower = W.W(ell - 1)
    if not W.W(ell).contains_space(image(X, W.W(ell))) or not lower.contains_space(image(X, lower)):
        raise ValueError("operator does not preserve the weight filtration")
    cols = [_quotient_coords(lifts, lower, X @ c) for c in lifts]
    return Matrix.from_columns(cols, len(lifts))


def _integral_basis(S: Subspace) -> list[list[int]]:
    """Z-basis of Z^n cap S (S defined over Q)."""
    n = S.ambient
    ann = S.annihilator()
    if not ann:
        return [[int(i == j) for j in range(n)] for i in range(n)]
    if any(x.im for y in ann for x in y):
        raise ValueError("subspace is not defined over Q")
    L = kernel_lattice(Matrix([[x.re for x in y] for y in ann]))
    return [list(b) for b in L.basis]


def quotient_variation(
    P: PeriodNormalForm, ell: int, cone: Sequence | None = None, J1: Sequence[int] | None = None
) -> QuotientData:
    """Polarized variation on gr_ell of W(J_1) (J_1 0-based, default all indices).

    Even weights are Tate-twisted to weight zero. The pairing on the quotient is
    Q~(N^j a, N^j b) = Q(a, N^{ell+2j} b) for a, b primitive of weight ell + 2j,
    using the Lefschetz decomposition of the cone element.
    """
    J1 = list(range(P.n)) if J1 is None else list(J1)
    if not is_nilpotent_in(P, J1):
        raise ValueError("period mapping is not a nilpotent orbit in the variables of J_1")
    if ell % 2:
        raise ValueError("odd quotient weights are not supported (weight-zero conventions)")
    cone = [1] * len(J1) if cone is None else list(cone)
    n = P.rank
    T = cone_element([P.N[j] for j in J1], cone) if J1 else Matrix.zeros(n, n)
    W = weight_filtration_of(T)
    if W.gr_dim(ell) == 0:
        raise ValueError(f"gr_{ell} of W(J_1) is zero; weight outside the range")
    upper, lower = W.W(ell), W.W(ell - 1)
    # integral lifts: Z^n cap W_ell modulo Z^n cap W_{ell-1}
    Lu = _integral_basis(upper)
    Ll = _integral_basis(lower)
    if Ll:
        coords = [_lattice_coords(Lu, b) for b in Ll]
        A = unimodular_completion(coords, len(Lu))
        r = len(Lu) - len(Ll)
        lifts = []
        for c in range(r):
            col = [A[i][c] for i in range(len(Lu))]
            lifts.append(vec([sum(col[i] * Lu[i][t] for i in range(len(Lu))) for t in range(n)]))
    else:
        lifts = [vec(b) for b in Lu]
    # Lefschetz basis of gr_ell: N^j P_{ell+2j}
    lef = []  # (j, a)
    k = abs(ell)
    while k <= W.hi:
        j = (k - ell) // 2
        prim = intersect(preimage(T.power(k + 1), W.W(-k - 3)), W.W(k))
        reps = complement_basis(prim, intersect(prim, W.W(k - 1)))
        lef.extend((j, a) for a in reps)
        k += 2
    lef_vecs = [T.power(j) @ a for j, a in lef]
    m = len(lifts)
    if len(lef_vecs) != m:
        raise ArithmeticError("Lefschetz decomposition does not match the graded piece")
    Q = P.lattice.Q
    G = [[ZERO] * m for _ in range(m)]
    for x, (j, a) in enumerate(lef):
        for y, (j2, b) in enumerate(lef):
            if j == j2:
                G[x][y] = sum((u * v for u, v in zip(a, Q @ (T.power(ell + 2 * j) @ b))), ZERO)
    # change to the integral basis
    C = Matrix.from_columns([_quotient_coords(lef_vecs, lower, c) for c in lifts], m)
    Qt = C.transpose() @ Matrix(G) @ C
    twist = ell // 2
    Fq = {}
    a, b = P.F.range()
    for p in range(a - 1, b + 2):
        Sp = intersect(P.F.F(p), upper)
        Fq[p - twist] = [_quotient_coords(lifts, lower, v) for v in Sp.basis]
    induced = [_induced(Nj, lifts, W, ell) for Nj in P.N]
    gam = [(e, _induced(Cm, lifts, W, ell)) for e, Cm in P.gamma.items()]
    Ntil = [induced[j] if j not in J1 else Matrix.zeros(m, m) for j in range(P.n)]
    Lt = PolarizedLattice(Qt)
    Pt = PeriodNormalForm(Lt, HodgeFiltration(Fq, m), Ntil, gam, name=f"{P.name}/gr{ell}", check=False)
    return QuotientData(Pt, ell, twist, lifts, induced, J1, cone, W)


def _lattice_coords(basis: list[list[int]], v) -> list[int]:
    x = Matrix.from_columns(basis, len(basis[0])).solve(vec(v))
    if x is None or any(c.re.denominator != 1 or c.im for c in x):
        raise ArithmeticError("vector is not in the integral span")
    return [int(c.re) for c in x]
