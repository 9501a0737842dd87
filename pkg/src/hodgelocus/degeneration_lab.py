"""Sequences of points escaping to the boundary, and numerical checks of what
happens to integral classes along them.

A growth schedule writes z(m) = i A t(m) + w(m).  Limits and boundedness are
decided empirically on a geometric sample of m <= m_max; every threshold used
is recorded in the reports.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from . import numeric
from .exact_core import (
    GQ,
    Matrix,
    Subspace,
    bilinear,
    complement_basis,
    intersect,
    kernel,
    projectors,
    vec,
)
from .extended_locus import positive_stabilizer_vector
from .filtrations import (
    MixedHodgeData,
    grading_operators_multi,
    joint_eigenspaces,
    weight_filtration_of,
)
from .hodge_core import Diagnostic, HodgeFiltration, PureHodgeStructure, hodge_decompose_and_norm, validate_polarized_hs
from .orbits import PeriodNormalForm, epsilon_tilde
from .rules import RuleError, as_callable

BOUNDED_EXPONENT = 0.05
LIMIT_TOL = 1e-6
LIMIT_DECAY_EXPONENT = -0.25
CONGRUENCE_TOL = 1e-9
FLOAT_EPS_FACTOR = 1024
ZERO_REL = 1e-12
RATIO_THRESHOLD = 50.0

VERDICT_HOLD = "conclusions hold"
VERDICT_UNBOUNDED = "hypothesis violated / unbounded"
VERDICT_FAIL = "conclusions fail"
NO_CONCLUSION = "hypothesis not satisfied; no conclusion"


def geometric_samples(m_max: int, count: int = 48, m_min: int = 1) -> list[int]:
    if m_max < m_min:
        raise ValueError("m_max must be at least m_min")
    xs = np.geomspace(m_min, m_max, count)
    return sorted({int(round(x)) for x in xs} | {int(m_max)})


def tail(ms: Sequence, frac: float = 0.5) -> slice:
    return slice(len(ms) - max(2, int(math.ceil(len(ms) * frac))), len(ms))


def power_exponent(ms, vals, frac: float = 0.5) -> float:
    """Fitted exponent of vals ~ m^a on the sampled tail; -inf when the tail is zero."""
    ms = np.asarray(ms, dtype=float)
    vals = np.abs(np.asarray(vals, dtype=float))
    sl = tail(ms, frac)
    x, y = ms[sl], vals[sl]
    if not np.all(np.isfinite(y)):
        return math.inf
    if np.all(y <= 1e-300):
        return -math.inf
    if np.count_nonzero(y > 1e-300) < 2:
        return -math.inf if y[-1] <= 1e-300 else 0.0
    return numeric.loglinear_slope(np.log(x), y)


def is_bounded(ms, vals) -> bool:
    """Growth test on the running maximum, so bounded oscillations do not count as growth."""
    env = np.maximum.accumulate(np.abs(np.asarray(vals, dtype=float)))
    return bool(power_exponent(ms, env) < BOUNDED_EXPONENT)


def _fmt(x):
    if isinstance(x, float) and not math.isfinite(x):
        return "inf" if x > 0 else ("-inf" if x < 0 else "nan")
    return x


# ---------------------------------------------------------------------------
# schedules


@dataclass
class GrowthSchedule:
    P: PeriodNormalForm
    A: list  # n x d rationals
    t_rule: Callable
    w_rule: Callable
    J: list  # partition J_1..J_d (0-based indices)
    T: list  # exact T_k = sum_j a_{jk} N_j
    t_src: object = None
    w_src: object = None
    report: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return len(self.A)

    @property
    def d(self) -> int:
        return len(self.A[0]) if self.A else 0

    def t(self, m) -> np.ndarray:
        return np.asarray(self.t_rule(m), dtype=complex).real.reshape(self.d)

    def w(self, m) -> np.ndarray:
        return np.asarray(self.w_rule(m), dtype=complex).reshape(self.n)

    def z(self, m) -> np.ndarray:
        Af = np.array([[float(a) for a in r] for r in self.A])
        return 1j * (Af @ self.t(m)) + self.w(m)

    def T_float(self) -> list[np.ndarray]:
        return [T.to_numpy() for T in self.T]

    def to_json(self):
        return {
            "n": self.n,
            "d": self.d,
            "A": [[str(a) for a in r] for r in self.A],
            "t_rule": self.t_src,
            "w_rule": self.w_src,
            "J": [[j + 1 for j in Jk] for Jk in self.J],
            "T": [T.to_json() for T in self.T],
            "checks": self.report,
        }


def _as_fraction(a) -> Fraction:
    if isinstance(a, GQ):
        if a.im:
            raise ValueError("schedule matrix entries must be real")
        return a.re
    if isinstance(a, str):
        return Fraction(a)
    if isinstance(a, float):
        return Fraction(a).limit_denominator(10**12)
    return Fraction(a)


def build_schedule(
    A,
    t_rule,
    w_rule,
    P: PeriodNormalForm,
    m_max: int = 10**4,
    m0: int = 10,
    ratio_threshold: float = RATIO_THRESHOLD,
    tol: float = 1e-9,
    domain_m_max: int = 100,
    Ys: Sequence | None = None,
    domain_zmax: float = 100.0,
) -> GrowthSchedule | Diagnostic:
    """Validate z(m) = i A t(m) + w(m) against P.

    Membership of Phi(z(m)) in D is tested on samples m0 <= m <= domain_m_max;
    without splittings only points with |z_j| <= domain_zmax are tested, since
    the unrescaled filtrations lose rank numerically far out.
    """
    try:
        A = [[_as_fraction(a) for a in row] for row in A]
    except (TypeError, ValueError) as exc:
        return Diagnostic("schedule", f"schedule matrix A is not rational: {exc}")
    n = len(A)
    if n != P.n:
        return Diagnostic("schedule", f"A has {n} rows but the period mapping has {P.n} variables")
    d = len(A[0]) if A else 0
    if d == 0 or any(len(r) != d for r in A):
        return Diagnostic("schedule", "A must be a nonempty rectangular n x d matrix")
    for j, r in enumerate(A):
        for k, a in enumerate(r):
            if a < 0:
                return Diagnostic("schedule", f"a_{{{j + 1},{k + 1}}} = {a} is negative")
    # partition: j lies in J_k where k is the first column with a_{jk} != 0
    J = [[] for _ in range(d)]
    for j, r in enumerate(A):
        first = next((k for k, a in enumerate(r) if a != 0), None)
        if first is None:
            return Diagnostic("schedule", f"support violation: row {j + 1} of A is zero")
        for k in range(first, d):
            if r[k] == 0:
                return Diagnostic(
                    "schedule",
                    f"support violation: a_{{{j + 1},{k + 1}}} = 0 although j lies in J_{first + 1}",
                )
        J[first].append(j)
    for k, Jk in enumerate(J):
        if not Jk:
            return Diagnostic("schedule", f"support violation: J_{k + 1} is empty")
    try:
        t_c = as_callable(t_rule)
        w_c = as_callable(w_rule)
    except RuleError as exc:
        return Diagnostic("schedule", str(exc))
    T = []
    for k in range(d):
        X = Matrix.zeros(P.rank, P.rank)
        for j in range(n):
            if A[j][k]:
                X = X + P.N[j].scale(GQ(A[j][k]))
        T.append(X)
    S = GrowthSchedule(P, A, t_c, w_c, J, T, t_rule, w_rule)
    ms = geometric_samples(m_max)
    try:
        ts = np.array([S.t(m) for m in ms])
        ws = np.array([S.w(m) for m in ms])
    except (RuleError, ValueError, TypeError) as exc:
        return Diagnostic("schedule", f"cannot evaluate schedule rules: {exc}")
    if not np.all(np.isfinite(ts)) or not np.all(np.isfinite(ws)):
        return Diagnostic("schedule", "schedule rules are not finite on the sample")
    bad = np.argwhere(ts <= 0)
    if bad.size:
        i, k = bad[0]
        return Diagnostic("schedule", f"t_{k + 1}(m) = {ts[i, k]:g} is not positive at m={ms[i]}")
    ext = np.hstack([ts, np.ones((len(ms), 1))])
    ratios = ext[:, :-1] / ext[:, 1:]
    late = [i for i, m in enumerate(ms) if m >= m0]
    for k in range(d):
        r = ratios[late, k]
        if np.any(np.diff(r) < -1e-9 * np.abs(r[:-1])) or not r[-1] > r[0] or r[-1] < ratio_threshold:
            name = f"t_{k + 1}/t_{k + 2}" if k + 1 < d else f"t_{k + 1}"
            return Diagnostic(
                "schedule",
                f"ratio {name} does not go to infinity (value {r[-1]:g} at m={ms[-1]}, "
                f"threshold {ratio_threshold:g}, monotone beyond m={m0})",
            )
    wb = float(np.abs(ws).max())
    w_tail = float(np.abs(ws[-1] - ws[-2]).max()) if len(ms) > 1 else 0.0
    # the period point itself must lie in D along the schedule
    # the period point itself must lie in D along the schedule; e(m) is a real
    # isometry, so the better conditioned e(m) Phi(z(m)) is tested when available
    dom = [m for m in ms if m0 <= m <= domain_m_max] or [ms[0]]
    try:
        Ys = default_splittings(S, Ys)
    except ValueError as exc:
        return Diagnostic("schedule", f"invalid splittings: {exc}")
    RP = RescaledPeriod(S, Rescaling(Ys or [Matrix.zeros(P.rank, P.rank)] * d, P.rank))
    if Ys is None:
        dom = [m for m in dom if np.abs(S.z(m)).max() <= domain_zmax] or [ms[0]]
    for m in dom:
        hs = validate_polarized_hs(P.lattice, RP.filtration(m), tol)
        if not isinstance(hs, PureHodgeStructure):
            return Diagnostic("schedule", f"Phi(z(m)) is not in D at m={m}: {hs.message}")
    S.report = {
        "samples": len(ms),
        "m_max": int(m_max),
        "ratio_threshold": ratio_threshold,
        "ratios_at_m_max": [float(x) for x in ratios[-1]],
        "w_sup": wb,
        "w_tail_step": w_tail,
        "domain_checked_m": dom,
        "domain_check_rescaled": Ys is not None,
        "phi_w_in_D": _phi_w_in_D(S, ms[-1], tol),
    }
    return S


def _phi_w_in_D(S: GrowthSchedule, m, tol) -> bool | None:
    w = S.w(m)
    if np.any(w.imag <= 0):
        return None
    hs = validate_polarized_hs(S.P.lattice, S.P.evaluate(w).F, tol)
    return isinstance(hs, PureHodgeStructure)


# ---------------------------------------------------------------------------
# the rescaling operators e(m)


class Rescaling:
    """e(t) = exp(1/2 sum log t_k Y_k), assembled from exact joint eigenprojectors."""

    def __init__(self, Ys: Sequence[Matrix], rank: int):
        self.rank = rank
        self.Ys = list(Ys)
        self.trivial = not self.Ys or all(Y.is_zero() for Y in self.Ys)
        if self.Ys:
            self.spaces = joint_eigenspaces(self.Ys)
        else:
            self.spaces = {(): Subspace.full(rank)}
        self.keys = sorted(self.spaces)
        self.proj = dict(zip(self.keys, projectors([self.spaces[k] for k in self.keys])))
        self._pf = {k: P.to_numpy() for k, P in self.proj.items()}
        self.d = len(self.Ys)

    def log_eigenvalue(self, ell, t) -> float:
        return 0.5 * sum(l * math.log(tk) for l, tk in zip(ell, t))

    def eigenvalue(self, ell, t) -> float:
        return math.exp(self.log_eigenvalue(ell, t))

    def matrix(self, t) -> np.ndarray:
        return sum(self.eigenvalue(k, t) * self._pf[k] for k in self.keys)

    def inverse(self, t) -> np.ndarray:
        return sum(math.exp(-self.log_eigenvalue(k, t)) * self._pf[k] for k in self.keys)

    def exact(self, sqrt_t: Sequence) -> Matrix:
        """e(t) for t_k = sqrt_t[k]^2 with rational square roots."""
        out = Matrix.zeros(self.rank, self.rank)
        for k in self.keys:
            c = GQ(1)
            for l, r in zip(k, sqrt_t):
                c = c * GQ(Fraction(r) ** l)
            out = out + self.proj[k].scale(c)
        return out

    def apply(self, t, v) -> np.ndarray:
        v = np.asarray(v, dtype=complex)
        return sum(self.eigenvalue(k, t) * (self._pf[k] @ v) for k in self.keys)

    def components(self, v) -> dict:
        v = np.asarray(v, dtype=complex)
        return {k: self._pf[k] @ v for k in self.keys}

    def blocks(self, X: np.ndarray) -> dict:
        out = {}
        for a in self.keys:
            for b in self.keys:
                B = self._pf[a] @ X @ self._pf[b]
                if np.abs(B).max() > 0:
                    out[(a, b)] = B
        return out

    def conjugate(self, blocks: dict, t) -> np.ndarray:
        """e(t) X e(t)^{-1} from the eigenblocks of X."""
        X = np.zeros((self.rank, self.rank), dtype=complex)
        for (a, b), B in blocks.items():
            X = X + math.exp(self.log_eigenvalue(a, t) - self.log_eigenvalue(b, t)) * B
        return X

    def position(self, h) -> tuple | None:
        """Largest multi-index (lexicographic) with a nonzero component; exact for exact h."""
        h = vec(h)
        best = None
        for k in self.keys:
            c = self.proj[k] @ h
            if any(c):
                best = k
        return best


def _order_basis(R: Rescaling, S: Subspace) -> list[tuple]:
    """Basis of S adapted to the lexicographic filtration by eigen-degree."""
    out = []
    prev = Subspace.zero(S.ambient)
    acc = []
    for k in R.keys:
        acc.extend(R.spaces[k].basis)
        cur = intersect(S, Subspace(acc, S.ambient))
        out.extend(complement_basis(cur, prev))
        prev = cur
        if prev.dim == S.dim:
            break
    return out


def default_splittings(S: GrowthSchedule, Yk=None, mhs: MixedHodgeData | None = None) -> list[Matrix] | None:
    """Instance-supplied Y_k (validated), or the grading of an R-split limit when d = 1."""
    if Yk:
        Ws = [weight_filtration_of(T) for T in S.T]
        return grading_operators_multi(Yk, Ws)
    if S.d != 1:
        return None
    M = S.P.limit_mhs() if mhs is None else mhs
    if not isinstance(M, MixedHodgeData) or not M.r_split:
        return None
    return [M.grading()]


class RescaledPeriod:
    """Evaluates e(m) Phi(z(m)) without forming the large matrices exp(zN)."""

    def __init__(self, S: GrowthSchedule, R: Rescaling):
        self.S = S
        self.R = R
        P = S.P
        self.Nb = [R.blocks(Nj.to_numpy()) for Nj in P.N]
        self.Gb = [(e, R.blocks(C)) for e, C in P._gf]
        self.levels = {}
        for p, Sp in P.F.levels().items():
            basis = _order_basis(R, Sp)
            self.levels[p] = np.array([[complex(x) for x in b] for b in basis], dtype=complex)

    def operators(self, m):
        """(e(m) g(z(m)) e(m)^{-1}, its inverse, t, z)."""
        S, R = self.S, self.R
        t = S.t(m)
        z = S.z(m)
        s = S.P.s_of(z)
        n = S.P.rank
        X = np.zeros((n, n), dtype=complex)
        for zj, B in zip(z, self.Nb):
            X = X + zj * R.conjugate(B, t)
        G = np.zeros((n, n), dtype=complex)
        for e, B in self.Gb:
            G = G + np.prod(np.power(s, e)) * R.conjugate(B, t)
        E1, E2 = numeric.expm_nilpotent(X), numeric.expm_nilpotent(G)
        g = E1 @ E2
        ginv = numeric.expm_nilpotent(-G) @ numeric.expm_nilpotent(-X)
        return g, ginv, t, z

    def filtration(self, m, g=None, t=None) -> HodgeFiltration:
        if g is None:
            g, _, t, _ = self.operators(m)
        lv = {}
        for p, B in self.levels.items():
            rows = []
            for b in B:
                v = self.R.apply(t, b)
                v = v / np.linalg.norm(v)
                rows.append(g @ v)
            lv[p] = np.array(rows, dtype=complex) if rows else np.zeros((0, self.S.P.rank), complex)
        return HodgeFiltration(lv, self.S.P.rank, "float")


@dataclass
class ScalingReport:
    R: Rescaling
    ms: list
    F_sharp: dict
    tail: float
    decay_exponent: float
    converged: bool
    closed_form_distance: float | None
    commutation_exact: bool | None
    eigen_action_exact: bool
    eigen_action_residual: float
    in_D: bool
    tol: float
    distances: list

    def to_json(self):
        return {
            "samples": self.ms,
            "tail": _fmt(self.tail),
            "tail_decay_exponent": _fmt(self.decay_exponent),
            "converged": self.converged,
            "tol": self.tol,
            "closed_form_distance": None if self.closed_form_distance is None else _fmt(self.closed_form_distance),
            "commutation_identity_exact": self.commutation_exact,
            "eigenvalue_action_exact": self.eigen_action_exact,
            "eigenvalue_action_residual": self.eigen_action_residual,
            "F_sharp_in_D": self.in_D,
            "F_sharp": {str(p): [[numeric.fmt_complex(x) for x in r] for r in B] for p, B in sorted(self.F_sharp.items())},
        }


def _filtration_distance(F1: HodgeFiltration, F2: HodgeFiltration) -> float:
    out = 0.0
    for p in F1.levels():
        out = max(out, numeric.grassmann_distance(np.atleast_2d(F1.F(p)), np.atleast_2d(F2.F(p))))
    return out


def commutation_identity_exact(R: Rescaling, T: Matrix, roots=(2, 3, Fraction(7, 2))) -> bool:
    """e N = (1/y) N e on exact matrices at y = r^2, plus [Y, N] = -2N."""
    if R.d != 1:
        return False
    Y = R.Ys[0]
    if not (Y @ T - T @ Y - T.scale(-2)).is_zero():
        return False
    for r in roots:
        e = R.exact([r])
        if not (e @ T - (T @ e).scale(GQ(1 / Fraction(r) ** 2))).is_zero():
            return False
    return True


def eigenvalue_action_check(R: Rescaling, ts=((4, 9), (Fraction(9, 4), 16))) -> tuple[bool, float]:
    """Exact: e(t) v = prod t_k^{l_k/2} v on every eigenvector; float residual of the assembly."""
    ok = True
    res = 0.0
    for t in ts:
        t = tuple(t)[: max(R.d, 1)]
        roots = []
        for x in t:
            x = Fraction(x)
            rn, rd = math.isqrt(x.numerator), math.isqrt(x.denominator)
            roots.append(Fraction(rn, rd))
        e = R.exact(roots)
        ef = R.matrix([float(x) for x in t])
        for k in R.keys:
            lam = GQ(1)
            for l, r in zip(k, roots):
                lam = lam * GQ(r**l)
            for b in R.spaces[k].basis:
                if e @ b != tuple(x * lam for x in b):
                    ok = False
                bf = np.array([complex(x) for x in b])
                res = max(res, float(np.linalg.norm(ef @ bf - complex(lam) * bf) / np.linalg.norm(bf)))
    return ok, res


def scaling_and_limit(
    S: GrowthSchedule,
    Ys: Sequence | None = None,
    m_max: int = 10**4,
    tol: float = LIMIT_TOL,
    F_hat=None,
    T_hat=None,
    samples: int = 48,
) -> ScalingReport:
    """e(m), the limit F_sharp = lim e(m) Phi(z(m)), and its convergence diagnostics."""
    P = S.P
    if Ys is None:
        Ys = default_splittings(S)
    if Ys is None:
        Ys = [Matrix.zeros(P.rank, P.rank) for _ in range(S.d)]
    R = Rescaling(list(Ys), P.rank)
    RP = RescaledPeriod(S, R)
    ms = geometric_samples(m_max, samples)
    Fs = [RP.filtration(m) for m in ms]
    dists = [_filtration_distance(Fs[i], Fs[i + 1]) for i in range(len(Fs) - 1)]
    tail_val = dists[-1] if dists else 0.0
    expo = power_exponent(ms[1:], dists) if dists else -math.inf
    converged = bool(tail_val < tol or expo <= LIMIT_DECAY_EXPONENT)
    F_last = Fs[-1]
    hs = validate_polarized_hs(P.lattice, F_last, 1e-7)
    closed = None
    comm = None
    if S.d == 1:
        Fh = P.F if F_hat is None else F_hat
        Th = S.T[0] if T_hat is None else T_hat
        E = numeric.expm_nilpotent(1j * Th.to_numpy())
        lv = {}
        for p, Sp in Fh.levels().items():
            B = Sp.matrix().to_numpy() if Sp.dim else np.zeros((0, P.rank), complex)
            lv[p] = (E @ B.T).T if Sp.dim else B
        closed = _filtration_distance(F_last, HodgeFiltration(lv, P.rank, "float"))
        comm = commutation_identity_exact(R, Th) if not R.trivial else None
    ok, res = eigenvalue_action_check(R)
    return ScalingReport(
        R,
        ms,
        {p: F_last.F(p) for p in F_last.levels()},
        float(tail_val),
        float(expo),
        converged,
        None if closed is None else float(closed),
        comm,
        ok,
        res,
        isinstance(hs, PureHodgeStructure),
        tol,
        [float(x) for x in dists],
    )


# ---------------------------------------------------------------------------
# harmless sequences


@dataclass
class HarmlessCertificate:
    accepted: bool
    alpha: float
    alpha_fits: dict
    ms: list
    component_norms: list  # per m: [||b_0||, ..., ||b_d||]
    T_norms: list  # per m: [||T_1 b||, ..., ||T_d b||]
    b_norms: list
    bound: list
    bound_sup: float
    reason: str
    b_rule: Callable = field(repr=False, default=None)
    _split: Callable = field(repr=False, default=None)
    alpha_min: float = 1e-3

    def components(self, m) -> list[np.ndarray]:
        return self._split(self.b_rule(m))

    def to_json(self):
        return {
            "accepted": self.accepted,
            "alpha": _fmt(self.alpha),
            "alpha_min": self.alpha_min,
            "alpha_fits": {k: _fmt(v) for k, v in self.alpha_fits.items()},
            "bound_sup": _fmt(self.bound_sup),
            "reason": self.reason,
            "samples": self.ms,
        }


def kernel_chain(S: GrowthSchedule) -> list[Subspace]:
    """V_0 = H, V_k = ker T_1 cap ... cap ker T_k (exact)."""
    V = [Subspace.full(S.P.rank)]
    for T in S.T:
        V.append(intersect(V[-1], kernel(T)))
    return V


def _splitter(S: GrowthSchedule):
    V = kernel_chain(S)
    Ps = []
    for Vk in V[1:]:
        B = numeric.row_basis(Vk.matrix().to_numpy()) if Vk.dim else np.zeros((0, S.P.rank), complex)
        Ps.append(numeric.projector(B))

    def split(b):
        b = np.asarray(b, dtype=complex)
        scale = max(1.0, float(np.linalg.norm(b)))
        out = []
        rest = b
        for Pk in Ps:
            keep = Pk @ rest
            out.append(rest - keep)
            rest = keep
        out.append(rest)
        return [c if np.linalg.norm(c) > ZERO_REL * scale else np.zeros_like(c) for c in out]

    return split


def _decay_rate(xs, vals) -> float:
    """alpha with vals ~ exp(-alpha x), inf when vals vanish identically."""
    xs = np.asarray(xs, dtype=float)
    vals = np.asarray(vals, dtype=float)
    nz = vals > 1e-300
    if not nz.any():
        return math.inf
    if nz.sum() < 2:
        # a single nonzero sample followed by exact zeros: faster than any rate we can fit
        return math.inf if not nz[-1] else 0.0
    return -numeric.loglinear_slope(xs[nz], vals[nz])


def harmless_decompose(
    S: GrowthSchedule,
    b_rule,
    alpha_min: float = 1e-3,
    m_max: int = 10**4,
    samples: int = 48,
) -> HarmlessCertificate:
    """Iterated kernel projection b = b_0 + ... + b_d and a fitted decay rate."""
    b_c = as_callable(b_rule) if not callable(b_rule) else b_rule
    split = _splitter(S)
    Tf = S.T_float()
    ms = geometric_samples(m_max, samples)
    comp, Tn, bn, ts = [], [], [], []
    for m in ms:
        b = np.asarray(b_c(m), dtype=complex).reshape(S.P.rank)
        parts = split(b)
        comp.append([float(np.linalg.norm(c)) for c in parts])
        sc = max(1.0, float(np.linalg.norm(b)))
        tn = []
        for T in Tf:
            v = float(np.linalg.norm(T @ b))
            tn.append(v if v > ZERO_REL * sc else 0.0)
        Tn.append(tn)
        bn.append(float(np.linalg.norm(b)))
        ts.append(S.t(m))
    ts = np.array(ts)
    comp = np.array(comp)
    Tn = np.array(Tn)
    bn = np.array(bn)
    fits = {}
    for k in range(S.d):
        fits[f"b{k}"] = _decay_rate(ts[:, k], comp[:, k])
        fits[f"T{k + 1}b"] = _decay_rate(ts[:, k], Tn[:, k])
    finite = [a for a in fits.values() if math.isfinite(a)]
    alpha = min(finite) * 0.99 if finite else math.inf
    reason = ""
    bound = []
    if not np.all(np.isfinite(bn)):
        reason = "b(m) is not finite on the sample"
    elif not is_bounded(ms, bn):
        reason = f"||b(m)|| is unbounded (tail exponent {power_exponent(ms, bn):.3g})"
    elif alpha < alpha_min:
        worst = min(fits, key=fits.get)
        reason = f"no decay rate alpha >= {alpha_min:g} fits ({worst}: alpha = {fits[worst]:.3g})"
    if math.isfinite(alpha) and alpha > 0:
        for i in range(len(ms)):
            v = bn[i]
            for k in range(S.d):
                if Tn[i, k] > 0:
                    v += math.exp(min(alpha * ts[i, k] + math.log(Tn[i, k]), 700.0))
            bound.append(v)
    else:
        bound = [float(bn[i]) for i in range(len(ms))]
    bsup = float(max(bound)) if bound else 0.0
    if not reason and not is_bounded(ms, bound):
        reason = "the harmless bound grows on the sample"
    if not reason and not is_bounded(ms, comp[:, S.d]):
        reason = "the last component b_d(m) is unbounded"
    return HarmlessCertificate(
        accepted=not reason,
        alpha=alpha,
        alpha_fits=fits,
        ms=ms,
        component_norms=comp.tolist(),
        T_norms=Tn.tolist(),
        b_norms=bn.tolist(),
        bound=bound,
        bound_sup=bsup,
        reason=reason or "harmless",
        b_rule=b_c,
        _split=split,
        alpha_min=alpha_min,
    )


def _lower_hodge_projector(M: MixedHodgeData) -> np.ndarray:
    n = M.ambient
    out = np.zeros((n, n), dtype=complex)
    for (p, q), P in M.proj.items():
        if p <= -1:
            out = out + P.to_numpy()
    return out


def canonical_harmless_rule(S: GrowthSchedule, h_rule, R: Rescaling | None = None, M: MixedHodgeData | None = None):
    """b(m) = g(z) (g(z)^{-1} h(m))_{p <= -1}, computed in rescaled coordinates.

    h(m) - b(m) lies in Phi^0(z(m)) by construction, and b(m) is harmless
    whenever the coordinates of h(m) against the extension sections stay bounded.
    """
    P = S.P
    M = P.limit_mhs() if M is None else M
    if not isinstance(M, MixedHodgeData):
        raise ValueError(M.message)
    R = R or Rescaling([Matrix.zeros(P.rank, P.rank)] * S.d, P.rank)
    RP = RescaledPeriod(S, R)
    pib = R.blocks(_lower_hodge_projector(M))
    h_c = as_callable(h_rule) if not callable(h_rule) else h_rule

    def b(m):
        g, ginv, t, _ = RP.operators(m)
        eh = R.apply(t, np.asarray(h_c(m), dtype=complex))
        eb = g @ (R.conjugate(pib, t) @ (ginv @ eh))
        return sum(math.exp(-R.log_eigenvalue(k, t)) * (R._pf[k] @ eb) for k in R.keys)

    return b


def harmless_transport(
    S: GrowthSchedule,
    cert: HarmlessCertificate,
    which: str,
    J: Sequence[int] | None = None,
    w_level: int | None = None,
    alpha_min: float | None = None,
    m_max: int | None = None,
) -> HarmlessCertificate:
    """Apply exp(sum z_j N_j), exp(Gamma(s)), or move b(m) into W_w(J)."""
    if not cert.accepted:
        raise ValueError("input sequence is not certified harmless")
    P = S.P
    b0 = cert.b_rule
    amin = cert.alpha_min if alpha_min is None else alpha_min
    mm = cert.ms[-1] if m_max is None else m_max
    if which == "expZN":

        def b(m):
            return numeric.expm_nilpotent(P.zN(S.z(m))) @ np.asarray(b0(m), dtype=complex)

    elif which == "expGamma":

        def b(m):
            return numeric.expm_nilpotent(P.gamma_at(P.s_of(S.z(m)))) @ np.asarray(b0(m), dtype=complex)

    elif which == "subquotient":
        if J is None or w_level is None:
            raise ValueError("subquotient transport needs J and a weight level")
        from .orbits import is_nilpotent_in

        if not is_nilpotent_in(P, J):
            raise ValueError("the period mapping is not a nilpotent orbit in the variables s_j, j in J")
        WJ = P.weight(J).W(w_level)
        B = numeric.row_basis(WJ.matrix().to_numpy()) if WJ.dim else np.zeros((0, P.rank), complex)
        for m in cert.ms:
            v = np.asarray(b0(m), dtype=complex)
            if np.linalg.norm(v) and numeric.in_span_residual(B, v) > 1e-9:
                raise ValueError(f"b(m) is not in W_{w_level}(J) at m={m}")
        b = canonical_harmless_rule(S, b0)
    else:
        raise ValueError("which must be expZN, expGamma or subquotient")
    out = harmless_decompose(S, b, alpha_min=amin, m_max=mm, samples=len(cert.ms))
    if which == "subquotient" and out.accepted:
        for m in out.ms:
            v = b(m)
            if np.linalg.norm(v) > 1e-12 and numeric.in_span_residual(B, v) > 1e-8:
                out.accepted = False
                out.reason = f"transported b(m) left W_{w_level}(J) at m={m}"
                break
    return out


# ---------------------------------------------------------------------------
# verification along a sequence


class CongruenceError(ValueError):
    def __init__(self, m, residual):
        super().__init__(f"h(m) - b(m) is not in Phi^0(z(m)) at m={m} (relative residual {residual:.3g})")
        self.m = m
        self.residual = residual


@dataclass
class DegenerationReport:
    verdict: str
    conclusion: str
    rows: list
    columns: list
    sections: dict

    def to_json(self):
        return {"verdict": self.verdict, "conclusion": self.conclusion, "columns": self.columns, **self.sections}

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for r in self.rows:
            w.writerow([_csv(x) for x in r])
        return buf.getvalue()


def _csv(x):
    if isinstance(x, float):
        if not math.isfinite(x):
            return _fmt(x)
        return f"{x:.17g}"
    return str(x)


def trajectory_columns(d: int, eps_keys: Sequence[str]) -> list[str]:
    cols = ["m"] + [f"t{k + 1}" for k in range(d)] + ["hodge_norm", "e_norm"]
    cols += [f"T{k + 1}h_norm" for k in range(d)]
    cols += [f"eps_{k}" for k in eps_keys]
    return cols


def _hs(P: PeriodNormalForm, F: HodgeFiltration):
    hs = validate_polarized_hs(P.lattice, F, 1e-7)
    return hs if isinstance(hs, PureHodgeStructure) else None


def hodge_norm_both(S: GrowthSchedule, R: Rescaling, m, h) -> tuple[float, float]:
    """(||h|| at Phi(z(m)) computed directly, ||e(m) h|| at e(m) Phi(z(m)))."""
    P = S.P
    hs_raw = _hs(P, P.evaluate(S.z(m)).F)
    RP = RescaledPeriod(S, R)
    g, _, t, _ = RP.operators(m)
    hs_r = _hs(P, RP.filtration(m, g, t))
    hv = np.asarray(h, dtype=complex)
    a = math.sqrt(max(hodge_decompose_and_norm(hs_raw, hv)[1], 0.0)) if hs_raw else math.nan
    b = math.sqrt(max(hodge_decompose_and_norm(hs_r, R.apply(t, hv))[1], 0.0)) if hs_r else math.nan
    return a, b


def verify_degeneration(
    S: GrowthSchedule,
    h_rule,
    b_rule=None,
    K=None,
    Ys: Sequence | None = None,
    m_max: int = 10**4,
    alpha_min: float = 1e-3,
    samples: int = 48,
    congruence_tol: float = CONGRUENCE_TOL,
) -> DegenerationReport:
    """Check the conclusions about h(m) along the schedule; never a proof."""
    P = S.P
    Q = P.lattice.Q
    h_c = as_callable(h_rule) if not callable(h_rule) else h_rule
    M = P.limit_mhs()
    if Ys is None:
        Ys = default_splittings(S, mhs=M if isinstance(M, MixedHodgeData) else None)
    have_Y = Ys is not None
    R = Rescaling(list(Ys) if have_Y else [Matrix.zeros(P.rank, P.rank)] * S.d, P.rank)
    RP = RescaledPeriod(S, R)
    ms = geometric_samples(m_max, samples)

    # integrality
    hs_int = []
    for m in ms:
        hv = h_c.integral(m) if hasattr(h_c, "integral") else _to_int(h_c(m))
        if hv is None or len(hv) != P.rank:
            raise ValueError(f"h(m) is not an integral vector of length {P.rank} at m={m}")
        hs_int.append(hv)
    qvals = [bilinear(Q, vec(h), vec(h)).re for h in hs_int]

    if b_rule is None:
        b_c = canonical_harmless_rule(S, lambda m: hs_int[ms.index(m)] if m in ms else h_c(m), R, M)
        b_src = "canonical"
    else:
        b_c = as_callable(b_rule) if not callable(b_rule) else b_rule
        b_src = "supplied"

    rows = []
    hn, en, bh = [], [], []
    congr = []
    tols = []
    eps_norms = []
    Tf = S.T_float()
    step1 = []
    ebh = []
    eNh = []
    eps_keys = None
    for i, m in enumerate(ms):
        h = np.array(hs_int[i], dtype=complex)
        b = np.asarray(b_c(m), dtype=complex).reshape(P.rank)
        g, ginv, t, z = RP.operators(m)
        Fm = RP.filtration(m, g, t)
        hsm = _hs(P, Fm)
        eh = R.apply(t, h)
        eb = R.apply(t, b)
        # congruence h - b in Phi^0(z(m)), tested after rescaling
        F0 = np.atleast_2d(Fm.F(0))
        diff = eh - eb
        scale = max(np.linalg.norm(eh), np.linalg.norm(eb), 1e-300)
        if np.linalg.norm(diff) <= 1e-14 * scale:
            res = 0.0
        else:
            b_ = numeric.row_basis(F0)
            r = diff - b_.T @ (b_.conj() @ diff)
            res = float(np.linalg.norm(r) / scale)
        congr.append(res)
        # round-off in e(m) b grows with the conditioning of e(m)
        kappa = np.linalg.norm(R.matrix(t), 2) * np.linalg.norm(R.inverse(t), 2)
        tol_m = max(congruence_tol, FLOAT_EPS_FACTOR * np.finfo(float).eps * kappa)
        tols.append(tol_m)
        if res > tol_m:
            raise CongruenceError(m, res)
        if hsm is None:
            hnorm = bnorm = math.nan
        else:
            hnorm = math.sqrt(max(hodge_decompose_and_norm(hsm, eh)[1], 0.0))
            bnorm = math.sqrt(max(hodge_decompose_and_norm(hsm, eb)[1], 0.0))
        hn.append(hnorm)
        en.append(float(np.linalg.norm(eh)))
        bh.append(bnorm)
        step1.append(hnorm**2 - (float(qvals[i]) + 4 * bnorm**2))
        Th = [float(np.linalg.norm(T @ h)) for T in Tf]
        et = epsilon_tilde(P, z, hs_int[i])
        bn_ = et.block_norms()
        if eps_keys is None:
            eps_keys = list(bn_)
        eps_norms.append([bn_[k] for k in eps_keys])
        if S.n == 1:
            eNh.append(float(np.linalg.norm(R.apply(t, P.N[0].to_numpy() @ h))))
        ebh.append(eb)
        rows.append([m] + [float(x) for x in t] + [hnorm, en[-1]] + Th + eps_norms[-1])
    cols = trajectory_columns(S.d, eps_keys or [])

    # harmlessness of b
    cert = harmless_decompose(S, b_c, alpha_min=alpha_min, m_max=m_max, samples=samples)
    qabs = [abs(float(q)) for q in qvals]

    # (i) boundedness indicators
    ind = {
        "Q_bounded": is_bounded(ms, qabs),
        "hodge_norm_bounded": is_bounded(ms, hn) if all(math.isfinite(x) for x in hn) else None,
        "e_h_bounded": is_bounded(ms, en) if have_Y else None,
    }
    vals = [v for v in ind.values() if v is not None]
    ind["agree"] = len(set(vals)) <= 1
    # without an explicit K the hypothesis Q(h, h) <= K is read as boundedness of Q
    K_ok = ind["Q_bounded"] if K is None else all(abs(q) <= Fraction(K) for q in qvals)
    ind["exponents"] = {
        "Q": _fmt(power_exponent(ms, qabs)),
        "hodge_norm": _fmt(power_exponent(ms, hn)),
        "e_h": _fmt(power_exponent(ms, en)) if have_Y else None,
    }
    ind["threshold_exponent"] = BOUNDED_EXPONENT
    eps_arr = np.array(eps_norms) if eps_norms else np.zeros((len(ms), 0))
    ind["eps_tilde_bounded"] = {k: is_bounded(ms, eps_arr[:, j]) for j, k in enumerate(eps_keys or [])}

    # (ii) position
    sl = tail(ms)
    tail_h = hs_int[sl]
    pos = None
    if have_Y:
        ps = [R.position(h) for h in tail_h if any(h)]
        pos = max(ps) if ps else None
    b_t1 = [cert.b_norms[i] for i in range(len(ms))]
    t1 = [S.t(m)[0] for m in ms]
    b_decay = _decay_rate(t1, b_t1)
    weights_applicable = bool(have_Y and b_decay >= alpha_min and ind["e_h_bounded"])
    position = {
        "position": None if pos is None else list(pos),
        "filter": "tail samples with h(m) != 0",
        "exponential_b_decay": _fmt(b_decay),
        "weights_check_applicable": weights_applicable,
        "predicted": [0] * S.d if weights_applicable else None,
        "holds": (pos is None or all(x == 0 for x in pos)) if weights_applicable else None,
    }

    # (iii) limit of e(m) b(m)
    limit = None
    if cert.accepted and have_Y:
        diffs = []
        last = None
        for i, m in enumerate(ms):
            bd = cert.components(m)[-1]
            lim = R._pf[tuple([0] * R.d)] @ bd if tuple([0] * R.d) in R._pf else np.zeros_like(bd)
            diffs.append(float(np.linalg.norm(ebh[i] - lim)))
            last = lim
        expo = power_exponent(ms, diffs)
        lim_ker = max((float(np.linalg.norm(T @ last)) for T in Tf), default=0.0)
        limit = {
            "difference_at_m_max": diffs[-1],
            "difference_exponent": _fmt(expo),
            "holds": bool(diffs[-1] < LIMIT_TOL or expo <= LIMIT_DECAY_EXPONENT),
            "limit": [numeric.fmt_complex(x) for x in last],
            "limit_T_residual": lim_ker,
            "tol": LIMIT_TOL,
        }

    # (iv) stabilization
    # the conclusion is about a subsequence: h(m) bounded (finitely many integral
    # values), and every value taken on the tail is killed by all T_k
    const = all(h == tail_h[0] for h in tail_h)
    h0 = tail_h[-1]
    values = sorted(set(tail_h))
    h_bounded = is_bounded(ms, [float(np.linalg.norm(np.array(h, float))) for h in hs_int])

    def killed(h):
        return [T @ vec(h) == tuple(GQ(0) for _ in h) for T in S.T]

    Tk_zero = killed(h0)
    all_killed = all(all(killed(h)) for h in values)
    stab = {
        "filter": f"last {len(tail_h)} of {len(ms)} samples",
        "constant_on_tail": const,
        "h_bounded": h_bounded,
        "distinct_values_on_tail": len(values),
        "value": list(h0),
        "T_k_h_zero": Tk_zero,
        "T_k_zero_on_all_tail_values": all_killed,
    }
    if all(Tk_zero):
        a = positive_stabilizer_vector(P, h0)
        stab["positive_integers_a"] = None if a is None else list(a)
        w_inf = S.w(ms[-1])
        lhs = numeric.expm_nilpotent(-P.zN(S.z(ms[-1]))) @ np.array(h0, dtype=complex)
        rhs = numeric.expm_nilpotent(-P.zN(w_inf)) @ np.array(h0, dtype=complex)
        stab["limit_of_exp_minus_zN_h"] = float(np.linalg.norm(lhs - rhs))

    # (v) one-variable trace
    trace = None
    if S.n == 1:
        W = P.weight()
        N = P.N[0]
        in_W0 = all(W.W(0).contains(vec(h)) for h in tail_h)
        Wm1 = W.W(-1)
        cong0 = all(Wm1.contains(tuple(GQ(a - c) for a, c in zip(h, h0))) for h in tail_h)
        Nh0 = N @ vec(h0)
        trace = {
            "step1_hodge_bound": {
                "max_excess": _fmt(max(step1)) if all(math.isfinite(x) for x in step1) else None,
                "holds": all(x <= 1e-6 * (1 + abs(c)) for x, c in zip(step1, hn)) if all(
                    math.isfinite(x) for x in step1
                ) else None,
                "bound": "||h||^2 <= Q(h,h) + 4||b||^2",
            },
            "step2_norm_growth_exponent": _fmt(power_exponent(ms, [float(np.linalg.norm(np.array(h, float))) for h in hs_int])),
            "step3_in_W0": in_W0,
            "step3_congruent_mod_W_minus1": cong0,
            "step4_Nh0_in_W_minus3": W.W(-3).contains(Nh0),
            "step5_decay_rate": _fmt(_decay_rate([S.t(m)[0] for m in ms], eNh)) if have_Y else None,
            "step5_Nh_zero_on_tail": all(N @ vec(h) == tuple(GQ(0) for _ in h) for h in tail_h),
            "step6_h_bounded": is_bounded(ms, [float(np.linalg.norm(np.array(h, float))) for h in hs_int]),
        }

    hyp = {
        "integral": True,
        "K": None if K is None else str(K),
        "Q_within_K": K_ok,
        "congruence_max_residual": max(congr),
        "congruence_tol": congruence_tol,
        "congruence_tol_max_effective": float(max(tols)) if tols else congruence_tol,
        "b_rule": b_src,
        "harmless": cert.to_json(),
        "schedule": S.report,
    }
    hypothesis_ok = bool(K_ok and cert.accepted)
    concl_ok = bool(h_bounded and all_killed)
    if not hypothesis_ok:
        verdict, conclusion = VERDICT_UNBOUNDED, NO_CONCLUSION
    elif concl_ok:
        if const:
            conclusion = "h(m) is constant on the tail and T_k h = 0"
        else:
            conclusion = "h(m) takes finitely many values on the tail, each with T_k h = 0"
        verdict = VERDICT_HOLD
    else:
        verdict, conclusion = VERDICT_FAIL, "hypotheses hold on the sample but the conclusions do not"
    sections = {
        "hypotheses": hyp,
        "boundedness": ind,
        "position": position,
        "limit_e_b": limit,
        "stabilization": stab,
        "one_variable_trace": trace,
        "splittings_available": have_Y,
    }
    return DegenerationReport(verdict, conclusion, rows, cols, sections)


def _to_int(v):
    out = []
    for x in np.asarray(v).reshape(-1):
        x = complex(x)
        if x.imag or not float(x.real).is_integer():
            return None
        out.append(int(x.real))
    return tuple(out)
