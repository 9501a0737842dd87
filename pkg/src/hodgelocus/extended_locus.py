"""Stabilizer lattices, closure equations for the image of z -> eps~_h(z), and
limit Hodge-class candidates at the boundary."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import numeric
from .exact_core import (
    GQ,
    ZERO,
    Binomial,
    BinomialSystem,
    IntLattice,
    Matrix,
    Subspace,
    exp_nilpotent,
    intersect,
    kernel_lattice,
    lattice_ideal_binomials,
    unimodular_completion,
    vec,
)
from .filtrations import MixedHodgeData
from .hodge_core import Diagnostic, HodgeFiltration, int_scaled
from .orbits import TWO_PI_I, PeriodNormalForm, epsilon_tilde, shift_filtration


def stabilizer_lattice(N: Sequence[Matrix], h) -> IntLattice:
    """S(h) = {a in Z^n : sum a_j N_j h = 0}."""
    h = vec(h)
    n = len(N)
    if n == 0:
        return IntLattice(0, ())
    cols = [Nj @ h for Nj in N]
    rank = len(h)
    rows = [[cols[j][i] for j in range(n)] for i in range(rank)]
    re = [[x.re for x in r] for r in rows]
    im = [[x.im for x in r] for r in rows]
    M = [r for r in re + im if any(r)]
    if not M:
        return kernel_lattice([[0] * n])
    return kernel_lattice(M)


# ---------------------------------------------------------------------------
# closure system


@dataclass
class ClosureSystem:
    h: tuple
    w: tuple
    A: list  # n x n integer matrix in SL_n(Z)
    r: int
    Nprime: list  # N'_k = sum_j a_{j,k} N_j
    phi: list  # r row vectors; phi_j(x) = phi[j] . x on I^{-1,-1}
    closure1: list  # p values with a nontrivial component I^{-p,-p}
    binomials: BinomialSystem
    mhs: MixedHodgeData
    gamma_shifted: dict  # recentred Gamma
    F_shifted: HodgeFiltration
    P: PeriodNormalForm
    certificate: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return len(self.A)

    @property
    def exponent_matrix(self) -> list[list[int]]:
        """Exponents of the monomial map t -> s over the last n - r columns of A."""
        return [[self.A[j][k] for k in range(self.r, self.n)] for j in range(self.n)]

    @property
    def status(self) -> str:
        return self.binomials.status

    def to_json(self):
        return {
            "h": [x.to_json() for x in self.h],
            "w": [x.to_json() for x in self.w],
            "A": self.A,
            "r": self.r,
            "N_prime": [M.to_json() for M in self.Nprime],
            "phi": [[x.to_json() for x in f] for f in self.phi],
            "phi_normalization": "phi_j(sum_k c_k N'_k h) = -c_j",
            "closure1": [
                {"p": p, "equation": f"v^(-{p},-{p}) = (-1)^{p}/{p}! (sum_k phi_k(v^(-1,-1)) N'_k)^{p} h"}
                for p in self.closure1
            ],
            "closure2": {
                "exponent_matrix": self.exponent_matrix,
                "status": self.binomials.status,
                "degree_used": self.binomials.degree_used,
                "binomials": [
                    {
                        "u": list(b.u),
                        "binomial": str(b),
                        "twist": [[-self.A[j][k] for k in range(self.r)] for j in range(self.n)],
                    }
                    for b in self.binomials.binomials
                ],
            },
            "certificate": self.certificate,
        }


class ClosureHypothesisError(ValueError):
    pass


def _hypothesis_failure(P: PeriodNormalForm, h, w, M: MixedHodgeData) -> str | None:
    W = M.W
    Fm1 = M.F.F(-1)
    I11 = M.I.get((-1, -1), Subspace.zero(P.rank))
    for j, Nj in enumerate(P.N):
        v = Nj @ h
        if not W.W(-2).contains(v):
            return f"N_{j + 1} h is not in W_-2"
        if not Fm1.contains(v):
            return f"N_{j + 1} h is not in exp(wN) F^-1"
        if not I11.contains(v):
            return f"N_{j + 1} h escapes I^(-1,-1)"
    return None


def closure_equation_system(
    P: PeriodNormalForm,
    h,
    w=None,
    degree_cap: int = 8,
    samples: int = 200,
    seed: int = 0,
    tol: float = 1e-8,
) -> ClosureSystem:
    """Closure equations for the image of z -> (s, v -> Q(h, g(z) v)), with a sampling certificate."""
    h = vec(h)
    n = P.n
    w = tuple(GQ.coerce(x) for x in (w if w is not None else [0] * n))
    Fw = shift_filtration(P, w)
    M = P.replace(F=Fw).limit_mhs()
    if isinstance(M, Diagnostic):
        raise ClosureHypothesisError(f"limit data at w is not a mixed Hodge structure: {M.message}")
    bad = _hypothesis_failure(P, h, w, M)
    if bad:
        raise ClosureHypothesisError(bad)
    # recentred Gamma: exp(wN) Gamma exp(-wN)
    X = Matrix.zeros(P.rank, P.rank)
    for wj, Nj in zip(w, P.N):
        X = X + Nj.scale(wj)
    E, Einv = exp_nilpotent(X), exp_nilpotent(-X)
    gam = {e: E @ C @ Einv for e, C in P.gamma.items()}
    S = stabilizer_lattice(P.N, h)
    r = n - S.rank
    A = unimodular_completion(S, n) if n else []
    Np = []
    for k in range(n):
        T = Matrix.zeros(P.rank, P.rank)
        for j in range(n):
            if A[j][k]:
                T = T + P.N[j].scale(A[j][k])
        Np.append(T)
    # phi_j(N'_k h) = -delta_jk on I^{-1,-1}
    vecs = [Np[k] @ h for k in range(r)]
    keys = sorted(M.I)
    others = [v for key in keys if key != (-1, -1) for v in M.I[key].basis]
    I11 = M.I.get((-1, -1), Subspace.zero(P.rank))
    rest = []
    cur = Subspace(vecs, P.rank) if vecs else Subspace.zero(P.rank)
    if cur.dim != r:
        raise ArithmeticError("the vectors N'_k h are not independent")
    for b in I11.basis:
        if not cur.contains(b):
            rest.append(b)
            cur = Subspace(list(cur.basis) + [b], P.rank)
    B = Matrix.from_columns(vecs + rest + others, P.rank)
    Binv = B.inverse()
    phi = [tuple(-x for x in Binv.rows[j]) for j in range(r)]
    pmax = max((-p for (p, q) in M.I if p == q and p <= -1), default=0)
    closure1 = list(range(1, pmax + 1))
    Emat = [[A[j][k] for k in range(r, n)] for j in range(n)]
    if n == 0:
        bins = BinomialSystem([], "exact", 0, None)
    elif r == n:
        bins = _identity_binomials(n)  # the monomial map has a point as image
    else:
        bins = lattice_ideal_binomials(Emat, degree_cap)
    cs = ClosureSystem(h, w, A, r, Np, phi, closure1, bins, M, gam, Fw, P)
    if samples:
        cs.certificate = sampling_certificate(cs, samples, seed, tol)
    return cs


def _identity_binomials(n: int) -> BinomialSystem:
    L = kernel_lattice([[0] * n])
    return BinomialSystem([Binomial(tuple(int(i == j) for j in range(n))) for i in range(n)], "exact", 1, L)


@dataclass
class _FloatSplit:
    proj: dict  # (p,q) -> complex projector
    lower: list  # basis vectors of sum_{p <= -1} I^{p,q}
    F1: np.ndarray  # basis rows of exp(wN)F^1 (images of the stored F^1 basis)


def _float_split(cs: ClosureSystem) -> _FloatSplit:
    M = cs.mhs
    proj = {k: P.to_numpy() for k, P in M.proj.items()}
    lower = [np.array([complex(x) for x in v]) for (p, q), S in sorted(M.I.items()) if p <= -1 for v in S.basis]
    X = Matrix.zeros(cs.P.rank, cs.P.rank)
    for wj, Nj in zip(cs.w, cs.P.N):
        X = X + Nj.scale(wj)
    E = exp_nilpotent(X).to_numpy()
    F1 = np.array([E @ np.array([complex(x) for x in b]) for b in cs.P.F.basis(1)]).reshape(-1, cs.P.rank)
    return _FloatSplit(proj, lower, F1)


def recover_v(cs: ClosureSystem, z, split: _FloatSplit | None = None):
    """From the eps~ sample at z, recover (s, v) with v = (exp(-sum z' N) - id) h."""
    P = cs.P
    split = _float_split(cs) if split is None else split
    et = epsilon_tilde(P, z, cs.h)
    Q = P.lattice.Q_float()
    # u in sum_{p<=-1} I^{p,q} with Q(u, f) = functional(f) on the recentred F^1 basis
    if split.lower:
        U = np.array(split.lower).T  # rank x m
        Mq = U.T @ Q @ split.F1.T  # m x dimF1, rows: Q(u_a, f_i)
        coef, *_ = np.linalg.lstsq(Mq.T, et.F1, rcond=None)
        u = U @ coef
    else:
        u = np.zeros(P.rank, complex)
    zp = np.asarray(z, complex) - np.array([complex(x) for x in cs.w])
    s = P.s_of(z)
    G = np.zeros((P.rank, P.rank), complex)
    for e, C in cs.gamma_shifted.items():
        G = G + np.prod(np.power(s, np.array(e))) * C.to_numpy()
    eG = numeric.expm_nilpotent(G)
    emG = numeric.expm_nilpotent(-G)
    hf = np.array([complex(x) for x in cs.h])
    k = emG @ hf
    low = sum((split.proj[key] @ k for key in split.proj if key[0] <= -1), np.zeros(P.rank, complex))
    v = eG @ (u - low)
    return s, v, zp, et


def closure_residuals(cs: ClosureSystem, s, v) -> dict:
    """Relative residuals of every emitted equation at (s, v)."""
    proj = {k: P.to_numpy() for k, P in cs.mhs.proj.items()}
    hf = np.array([complex(x) for x in cs.h])
    scale = max(1.0, float(np.linalg.norm(v)), float(np.linalg.norm(hf)))
    v11 = proj[(-1, -1)] @ v if (-1, -1) in proj else np.zeros_like(v)
    ph = np.array([[complex(x) for x in f] for f in cs.phi], dtype=complex).reshape(cs.r, len(hf))
    phv = ph @ v11 if cs.r else np.zeros(0, complex)
    Npf = [M.to_numpy() for M in cs.Nprime]
    T = sum((phv[k] * Npf[k] for k in range(cs.r)), np.zeros((len(hf), len(hf)), complex))
    out = {}
    Vpart = sum((proj[k] @ v for k in proj if k[0] == k[1] and k[0] <= -1), np.zeros_like(v))
    out["v_in_V"] = float(np.linalg.norm(v - Vpart) / scale)
    term = hf.copy()
    for p in cs.closure1:
        term = T @ term
        rhs = ((-1) ** p / math.factorial(p)) * term
        lhs = proj[(-p, -p)] @ v
        out[f"closure1_p{p}"] = float(np.linalg.norm(lhs - rhs) / scale)
    # twisted binomials
    twist = np.ones(cs.n, complex)
    for j in range(cs.n):
        for k in range(cs.r):
            twist[j] *= np.exp(-TWO_PI_I * cs.A[j][k] * phv[k])
    st = np.asarray(s) * twist
    for b in cs.binomials.binomials:
        a, c = b.monomials(list(st))
        den = max(abs(a), abs(c), 1e-300)
        out[f"closure2_{b}"] = float(abs(a - c) / den)
    return out


def sampling_certificate(cs: ClosureSystem, samples: int = 200, seed: int = 0, tol: float = 1e-8) -> dict:
    rng = np.random.default_rng(seed)
    split = _float_split(cs)
    worst: dict[str, float] = {}
    phi_err = 0.0
    for _ in range(samples):
        x = rng.uniform(-1, 1, cs.n)
        y = rng.uniform(0.3, 1.5, cs.n)
        z = x + 1j * y
        s, v, zp, _ = recover_v(cs, z, split)
        res = closure_residuals(cs, s, v)
        for k, val in res.items():
            worst[k] = max(worst.get(k, 0.0), val)
        if cs.r:
            # phi(v^{-1,-1}) must reproduce the first r coordinates z'
            Ainv = np.linalg.inv(np.array(cs.A, float))
            zprime = Ainv @ zp
            v11 = split.proj[(-1, -1)] @ v
            ph = np.array([[complex(c) for c in f] for f in cs.phi])
            phi_err = max(phi_err, float(np.linalg.norm(ph @ v11 - zprime[: cs.r]) / max(1.0, np.linalg.norm(zprime))))
    worst["phi_coordinates"] = phi_err
    return {
        "samples": samples,
        "seed": seed,
        "tolerance": tol,
        "max_residual": worst,
        "passed": all(v <= tol for v in worst.values()),
    }


def binomials_vanish_on_parametrization(cs: ClosureSystem) -> bool:
    """Exact: s^{u+} and s^{u-} agree as Laurent monomials in t for every binomial."""
    E = cs.exponent_matrix
    m = cs.n - cs.r
    for b in cs.binomials.binomials:
        ep = [sum(b.plus[j] * E[j][k] for j in range(cs.n)) for k in range(m)]
        em = [sum(b.minus[j] * E[j][k] for j in range(cs.n)) for k in range(m)]
        if ep != em:
            return False
    return True


# ---------------------------------------------------------------------------
# limit Hodge-class candidates


def _int_rows(S: Subspace) -> np.ndarray:
    rows = []
    for y in S.annihilator():
        for part in ([x.re for x in y], [x.im for x in y]):
            if any(part):
                d = 1
                for x in part:
                    d = d * x.denominator // math.gcd(d, x.denominator)
                rows.append([int(x * d) for x in part])
    return np.array(rows, dtype=np.int64).reshape(-1, S.ambient)


def limit_epsilon(P: PeriodNormalForm, h, w) -> tuple:
    """(Q(h, exp(wN) f_i))_i over the stored F^1 basis (exact)."""
    Q = P.lattice.Q
    hv = vec(h)
    X = Matrix.zeros(P.rank, P.rank)
    for wj, Nj in zip(w, P.N):
        X = X + Nj.scale(GQ.coerce(wj))
    E = exp_nilpotent(X)
    return tuple(sum((a * b for a, b in zip(hv, Q @ (E @ f))), ZERO) for f in P.F.basis(1))


def positive_stabilizer_vector(P: PeriodNormalForm, h, a_max: int = 20, _grid=None):
    """Lexicographically smallest a in [1..a_max]^n with sum a_j N_j h = 0, or None."""
    n = P.n
    if n == 0:
        return ()
    h = vec(h)
    cols = [Nj @ h for Nj in P.N]
    if all(not x for c in cols for x in c):
        return (1,) * n
    re = Matrix([[cols[j][i].re for j in range(n)] for i in range(len(h))] + [[cols[j][i].im for j in range(n)] for i in range(len(h))])
    A, _ = int_scaled(re)
    grid = _grid if _grid is not None else np.array(list(itertools.product(range(1, a_max + 1), repeat=n)), dtype=np.int64)
    ok = np.all(grid @ A.astype(np.int64).T == 0, axis=1)
    idx = np.flatnonzero(ok)
    if not len(idx):
        return None
    return tuple(int(x) for x in grid[idx[0]])


def limit_hodge_candidates(
    P: PeriodNormalForm, K, w=None, R=0, box: int = 4, a_max: int = 20
) -> list[tuple[tuple[int, ...], tuple[int, ...]]]:
    """Integral h with |h|_inf <= box, |Q(h,h)| <= K, h in W_0, N_k h in W_-2 cap exp(wN)F^-1,
    |eps-bar(h)| <= R, and a positive a with sum a_j N_j h = 0."""
    n = P.n
    w = tuple(GQ.coerce(x) for x in (w if w is not None else [0] * n))
    K = Fraction(K)
    R = Fraction(R)
    W = P.weight()
    Fw = shift_filtration(P, w)
    target = intersect(W.W(-2), Fw.F(-1))
    pts = np.array(list(itertools.product(range(-box, box + 1), repeat=P.rank)), dtype=np.int64)
    Qi, D = int_scaled(P.lattice.Q)
    qv = np.einsum("ij,jk,ik->i", pts, Qi.astype(np.int64), pts)
    mask = np.abs(qv) <= K * D
    C0 = _int_rows(W.W(0))
    if C0.size:
        mask &= np.all(pts @ C0.T == 0, axis=1)
    Ct = _int_rows(target)
    for Nj in P.N:
        Nz, dN = int_scaled(Nj)
        img = pts @ Nz.astype(np.int64).T
        if Ct.size:
            mask &= np.all(img @ Ct.T == 0, axis=1)
    grid = np.array(list(itertools.product(range(1, a_max + 1), repeat=n)), dtype=np.int64) if n else None
    out = []
    for p in pts[mask]:
        h = tuple(int(x) for x in p)
        e = limit_epsilon(P, h, w)
        if sum((x.norm2() for x in e), Fraction(0)) > R * R:
            continue
        a = positive_stabilizer_vector(P, h, a_max, grid)
        if a is None:
            continue
        out.append((h, a))
    return sorted(out)


def brute_force_candidates(P: PeriodNormalForm, K, w=None, R=0, box: int = 4, a_max: int = 20):
    """Independent oracle: per-vector exact tests on the same box."""
    n = P.n
    w = tuple(GQ.coerce(x) for x in (w if w is not None else [0] * n))
    K, R = Fraction(K), Fraction(R)
    W = P.weight()
    Fw = shift_filtration(P, w)
    out = []
    for h in itertools.product(range(-box, box + 1), repeat=P.rank):
        hv = vec(h)
        if abs(P.lattice.pair(hv, hv).re) > K:
            continue
        if not W.W(0).contains(hv):
            continue
        if not all(W.W(-2).contains(Nj @ hv) and Fw.F(-1).contains(Nj @ hv) for Nj in P.N):
            continue
        e = limit_epsilon(P, h, w)
        if sum((x.norm2() for x in e), Fraction(0)) > R * R:
            continue
        a = None
        for cand in itertools.product(range(1, a_max + 1), repeat=n):
            tot = [ZERO] * P.rank
            for aj, Nj in zip(cand, P.N):
                tot = [t + aj * x for t, x in zip(tot, Nj @ hv)]
            if all(not x for x in tot):
                a = cand
                break
        if n and a is None:
            continue
        out.append((tuple(h), tuple(a) if a else ()))
    return sorted(out)
