"""Monodromy weight filtrations, Deligne splittings, grading operators and the
kernel lemma for R-split mixed Hodge structures."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .exact_core import (
    GQ,
    I,
    ZERO,
    LayerError,
    Matrix,
    Subspace,
    bilinear,
    commutator,
    conjugate,
    direct_sum_check,
    exp_nilpotent,
    image,
    intersect,
    is_nilpotent,
    kernel,
    preimage,
    projectors,
    ssum,
    vec,
)
from .hodge_core import Diagnostic, HodgeFiltration


def _as_matrix(M) -> Matrix:
    return M if isinstance(M, Matrix) else Matrix(M)


# ---------------------------------------------------------------------------
# weight filtrations


class WeightFiltration:
    """Increasing filtration W_k; W_k = 0 below `lo` and W_k = H from `hi` on."""

    def __init__(self, spaces: dict[int, Subspace], ambient: int):
        self.ambient = ambient
        ks = sorted(spaces)
        self._W = dict(spaces)
        self.lo = ks[0] if ks else 0
        self.hi = ks[-1] if ks else 0
        for k0, k1 in zip(ks, ks[1:]):
            if not self._W[k1].contains_space(self._W[k0]):
                raise ValueError("weight filtration is not increasing")

    def W(self, k: int) -> Subspace:
        if k in self._W:
            return self._W[k]
        if k < self.lo:
            return Subspace.zero(self.ambient)
        if k > self.hi:
            return Subspace.full(self.ambient)
        return self.W(k - 1)

    def indices(self) -> range:
        """Weights k with gr_k possibly nonzero."""
        return range(self.lo, self.hi + 1)

    def gr_dim(self, k: int) -> int:
        return self.W(k).dim - self.W(k - 1).dim

    def weights(self) -> list[int]:
        return [k for k in self.indices() if self.gr_dim(k)]

    def __eq__(self, o):
        if not isinstance(o, WeightFiltration) or o.ambient != self.ambient:
            return False
        lo = min(self.lo, o.lo) - 1
        hi = max(self.hi, o.hi) + 1
        return all(self.W(k) == o.W(k) for k in range(lo, hi + 1))

    def shifted(self, s: int) -> "WeightFiltration":
        """The filtration W'_k = W_{k-s} (so W[-s] in the usual notation)."""
        return WeightFiltration({k + s: S for k, S in self._W.items()}, self.ambient)

    def to_json(self):
        return {str(k): [[x.to_json() for x in b] for b in self.W(k).basis] for k in self.indices()}

    def __repr__(self):
        return f"WeightFiltration({ {k: self.W(k).dim for k in self.indices()} })"


def reindex(W: WeightFiltration, shift: int) -> WeightFiltration:
    """W[-shift]: the centered filtration moved to be centered at `shift`."""
    return W.shifted(shift)


def check_commuting_nilpotent(ops: Sequence[Matrix]) -> None:
    for j, N in enumerate(ops):
        if not is_nilpotent(N):
            raise ValueError(f"operator {j} is not nilpotent")
    for a, b in itertools.combinations(range(len(ops)), 2):
        if not commutator(ops[a], ops[b]).is_zero():
            raise ValueError(f"operators {a} and {b} do not commute")


def cone_element(ops: Sequence, coefficients: Sequence | None = None) -> Matrix:
    ops = [_as_matrix(N) for N in ops]
    if coefficients is None:
        coefficients = [1] * len(ops)
    if len(coefficients) != len(ops):
        raise ValueError("one coefficient per operator expected")
    n = ops[0].nrows
    N = Matrix.zeros(n, n)
    for a, M in zip(coefficients, ops):
        a = Fraction(a) if not isinstance(a, GQ) else a.re
        if a <= 0:
            raise ValueError("cone coefficients must be strictly positive")
        N = N + M.scale(a)
    return N


def weight_filtration(operators: Sequence, coefficients: Sequence | None = None) -> WeightFiltration:
    """Monodromy weight filtration of N = sum a_j N_j, centered at 0.

    Uses W_k = sum_{j >= 0} ker N^{j+1} cap im N^{j-k}, with im N^e = H for e <= 0.
    """
    ops = [_as_matrix(N) for N in operators]
    if not ops:
        raise ValueError("at least one operator required")
    check_commuting_nilpotent(ops)
    N = cone_element(ops, coefficients)
    return weight_filtration_of(N)


def weight_filtration_of(N: Matrix) -> WeightFiltration:
    n = N.nrows
    powers = [Matrix.identity(n)]
    while not powers[-1].is_zero():
        powers.append(powers[-1] @ N)
    m = len(powers) - 2  # N^m != 0, N^{m+1} = 0
    if m < 0:
        return WeightFiltration({0: Subspace.zero(n)}, n)
    full = Subspace.full(n)
    kers = [kernel(P) for P in powers]  # kers[e] = ker N^e
    ims = [image(P, full) for P in powers]

    def im(e):
        return full if e <= 0 else (ims[e] if e < len(ims) else Subspace.zero(n))

    def ker(e):
        return kers[e] if e < len(kers) else full

    spaces = {}
    for k in range(-m - 1, m + 1):
        S = Subspace.zero(n)
        for j in range(0, 2 * m + 2):
            S = ssum(S, intersect(ker(j + 1), im(j - k)))
        spaces[k] = S
    return WeightFiltration(spaces, n)


def check_weight_axioms(W: WeightFiltration, N: Matrix) -> Diagnostic | None:
    """None if N W_k in W_{k-2} and N^k : gr_k -> gr_-k is an isomorphism for k >= 0."""
    N = _as_matrix(N)
    lo, hi = W.lo - 2, W.hi + 2
    for k in range(lo, hi + 1):
        if not W.W(k - 2).contains_space(image(N, W.W(k))):
            return Diagnostic("weight_axiom", f"N W_{k} is not contained in W_{k - 2}", p=k)
    if W.W(hi).dim != W.ambient or W.W(lo).dim != 0:
        return Diagnostic("weight_axiom", "filtration is not exhaustive")
    for k in range(0, hi + 1):
        Nk = N.power(k)
        # injective on gr_k: (N^k)^{-1}(W_{-k-1}) cap W_k = W_{k-1}
        if intersect(preimage(Nk, W.W(-k - 1)), W.W(k)) != W.W(k - 1) and k > 0:
            return Diagnostic("weight_axiom", f"N^{k} is not injective on gr_{k}", p=k)
        # surjective onto gr_-k
        if ssum(image(Nk, W.W(k)), W.W(-k - 1)) != W.W(-k):
            return Diagnostic("weight_axiom", f"N^{k} does not map gr_{k} onto gr_{-k}", p=k)
    return None


# ---------------------------------------------------------------------------
# Deligne splitting


@dataclass
class MixedHodgeData:
    W: WeightFiltration
    F: HodgeFiltration
    I: dict  # (p, q) -> Subspace, nonzero pieces only
    proj: dict  # (p, q) -> projector along the other pieces
    r_split: bool
    ok: bool = True

    @property
    def ambient(self) -> int:
        return self.W.ambient

    def grading(self) -> Matrix:
        return grading_operator(self)

    def to_json(self):
        return {
            "r_split": self.r_split,
            "I": {f"{p},{q}": [[x.to_json() for x in b] for b in S.basis] for (p, q), S in sorted(self.I.items())},
        }


def deligne_splitting(W: WeightFiltration, F: HodgeFiltration):
    """The bigrading I^{p,q} of (W, F), or a Diagnostic when it does not split W and F."""
    if F.layer != "exact":
        raise LayerError("the Deligne splitting is computed on the exact layer only")
    if F.ambient != W.ambient:
        raise ValueError("W and F live in different spaces")
    n = W.ambient
    a, b = F.range()
    plo, phi = a, b
    wlo, whi = W.lo, W.hi
    conjF = {}

    def cF(q):
        if q not in conjF:
            conjF[q] = conjugate(F.F(q))
        return conjF[q]

    pieces = {}
    for p in range(plo, phi + 1):
        for q in range(min(plo, wlo - phi) - 1, max(phi, whi - plo) + 2):
            w = p + q
            if w < wlo or w > whi + 1:
                continue
            A = intersect(F.F(p), W.W(w))
            if A.dim == 0:
                continue
            B = intersect(cF(q), W.W(w))
            j = 1
            while w - j - 1 >= wlo:
                B = ssum(B, intersect(cF(q - j), W.W(w - j - 1)))
                j += 1
            S = intersect(A, B)
            if S.dim:
                pieces[(p, q)] = S
    bad = _reconstruction_failure(W, F, pieces)
    if bad:
        return Diagnostic("not_mhs", f"(W,F) is not a mixed Hodge structure: {bad}")
    keys = sorted(pieces)
    Ps = dict(zip(keys, projectors([pieces[k] for k in keys])))
    rs = all(conjugate(S) == pieces.get((q, p), Subspace.zero(n)) for (p, q), S in pieces.items())
    return MixedHodgeData(W, F, pieces, Ps, rs)


def _reconstruction_failure(W, F, pieces) -> str | None:
    n = W.ambient
    full = Subspace.full(n)
    if not direct_sum_check(list(pieces.values()), full):
        return "the pieces I^{p,q} do not form a direct sum decomposition"
    for w in range(W.lo - 1, W.hi + 1):
        parts = [S for (p, q), S in pieces.items() if p + q <= w]
        if not direct_sum_check(parts, W.W(w)) if parts else W.W(w).dim != 0:
            return f"W_{w} is not the sum of I^{{p,q}} with p+q <= {w}"
    a, b = F.range()
    for k in range(a, b + 2):
        parts = [S for (p, q), S in pieces.items() if p >= k]
        if not direct_sum_check(parts, F.F(k)) if parts else F.F(k).dim != 0:
            return f"F^{k} is not the sum of I^{{p,q}} with p >= {k}"
    return None


# ---------------------------------------------------------------------------
# grading operators and the Lie algebra bigrading


def grading_operator(M: MixedHodgeData) -> Matrix:
    """Y acting as multiplication by p+q on I^{p,q}."""
    n = M.ambient
    Y = Matrix.zeros(n, n)
    for (p, q), P in M.proj.items():
        if p + q:
            Y = Y + P.scale(p + q)
    return Y


def eigenspaces(Y: Matrix, bound: int | None = None) -> dict[int, Subspace]:
    """Integer eigenspaces E_l(Y); raises if Y is not diagonalizable with integer spectrum."""
    Y = _as_matrix(Y)
    n = Y.nrows
    bound = 2 * n + 2 if bound is None else bound
    out = {}
    total = 0
    for l in range(-bound, bound + 1):
        E = kernel(Y - Matrix.identity(n).scale(l))
        if E.dim:
            out[l] = E
            total += E.dim
    if total != n:
        raise ValueError("operator is not semisimple with integer eigenvalues")
    return out


def joint_eigenspaces(Ys: Sequence[Matrix]) -> dict[tuple[int, ...], Subspace]:
    """Simultaneous eigenspaces of commuting semisimple operators, keyed by eigenvalue tuple."""
    if not Ys:
        return {}
    n = Ys[0].nrows
    cur = {(): Subspace.full(n)}
    for Y in Ys:
        E = eigenspaces(Y)
        nxt = {}
        for key, S in cur.items():
            for l, T in E.items():
                X = intersect(S, T)
                if X.dim:
                    nxt[key + (l,)] = X
        cur = nxt
    if sum(S.dim for S in cur.values()) != n:
        raise ValueError("operators are not simultaneously diagonalizable")
    return cur


def grading_operators_multi(Ys: Sequence, Ws: Sequence[WeightFiltration]) -> list[Matrix]:
    """Validate instance-supplied splittings: pairwise commuting, Y_1 + ... + Y_k grading W^k."""
    Ys = [_as_matrix(Y) for Y in Ys]
    if len(Ys) != len(Ws):
        raise ValueError("one splitting per weight filtration expected")
    for a, b in itertools.combinations(range(len(Ys)), 2):
        if not commutator(Ys[a], Ys[b]).is_zero():
            raise ValueError(f"splittings Y_{a + 1} and Y_{b + 1} do not commute")
    acc = None
    for k, (Y, W) in enumerate(zip(Ys, Ws)):
        acc = Y if acc is None else acc + Y
        E = eigenspaces(acc)
        for w in range(W.lo - 1, W.hi + 1):
            parts = [S for l, S in E.items() if l <= w]
            S = Subspace([v for P in parts for v in P.basis], W.ambient)
            if S != W.W(w):
                raise ValueError(f"Y_1 + ... + Y_{k + 1} does not grade W^{k + 1} at weight {w}")
    if any(not Y.is_real() for Y in Ys):
        raise ValueError("splittings must be real")
    return Ys


def gpq_components(M: MixedHodgeData, X) -> dict[tuple[int, int], Matrix]:
    """X^{p,q} = sum_{a,b} pi_{a+p,b+q} X pi_{a,b}; only nonzero components returned."""
    X = _as_matrix(X)
    out: dict[tuple[int, int], Matrix] = {}
    for (a, b), Pab in M.proj.items():
        XP = X @ Pab
        if XP.is_zero():
            continue
        for (c, d), Pcd in M.proj.items():
            T = Pcd @ XP
            if not T.is_zero():
                key = (c - a, d - b)
                out[key] = out[key] + T if key in out else T
    return {k: v for k, v in out.items() if not v.is_zero()}


def in_gpq(M: MixedHodgeData, X, p: int, q: int) -> bool:
    comps = gpq_components(M, X)
    return set(comps) <= {(p, q)}


def lie_degree_ok(M: MixedHodgeData, X, pred) -> bool:
    """True iff every nonzero component X^{p,q} has pred(p, q)."""
    return all(pred(p, q) for (p, q) in gpq_components(M, X))


def q_compatibility_failure(M: MixedHodgeData, Q) -> tuple | None:
    """First pair of pieces (p,q), (p',q') with Q nonzero although (p',q') != (-p,-q)."""
    Q = _as_matrix(Q)
    for (k1, S1), (k2, S2) in itertools.product(sorted(M.I.items()), repeat=2):
        if k2 == (-k1[0], -k1[1]):
            continue
        for u in S1.basis:
            for v in S2.basis:
                if bilinear(Q, u, v):
                    return k1, k2
    return None


def in_isometry_algebra(X, Q) -> bool:
    """Q(Xu, v) + Q(u, Xv) = 0 for all u, v."""
    X, Q = _as_matrix(X), _as_matrix(Q)
    return (X.transpose() @ Q + Q @ X).is_zero()


# ---------------------------------------------------------------------------
# kernel lemma for real (-1,-1)-morphisms


@dataclass
class KernelTestResult:
    passed: bool
    precondition: bool
    b: tuple | None
    witness: dict
    message: str

    def to_json(self):
        return {
            "passed": self.passed,
            "precondition": self.precondition,
            "b": None if self.b is None else [x.to_json() for x in self.b],
            "message": self.message,
        }


def _e_iN(N: Matrix) -> Matrix:
    return exp_nilpotent(N.scale(I))


def kernel_lemma_spaces(M: MixedHodgeData, N, ell: int) -> dict:
    """Subspaces entering the kernel lemma at level ell."""
    N = _as_matrix(N)
    Y = grading_operator(M)
    n = M.ambient
    E = kernel(Y - Matrix.identity(n).scale(2 * ell))
    target = intersect(E, kernel(N))
    shifted = image(_e_iN(N), M.F.F(ell))
    return {"target": target, "shifted_F": shifted, "W": M.W.W(2 * ell), "Y": Y}


def check_morphism(M: MixedHodgeData, N) -> bool:
    """N real with all bigraded components of type (-1,-1)."""
    N = _as_matrix(N)
    return N.is_real() and in_gpq(M, N, -1, -1)


def mhs_kernel_test(M: MixedHodgeData, N, h, b, ell: int) -> KernelTestResult:
    """Check the conclusion h in E_{2l}(Y) cap ker N under the congruence hypothesis.

    b may be None, in which case a suitable b is solved for.
    """
    N = _as_matrix(N)
    if not M.r_split:
        raise ValueError("mixed Hodge structure is not R-split")
    if not check_morphism(M, N):
        raise ValueError("N is not a real (-1,-1)-morphism")
    h = vec(h)
    if any(x.im for x in h):
        return KernelTestResult(False, False, None, {}, "h is not real")
    sp = kernel_lemma_spaces(M, N, ell)
    if not sp["W"].contains(h):
        return KernelTestResult(False, False, None, {}, f"h is not in W_{2 * ell}")
    if b is None:
        b = _solve_b(sp, h)
        if b is None:
            return KernelTestResult(False, False, None, {}, "no b in E(Y) cap ker N with h = b mod e^{iN}F")
    b = vec(b)
    if not sp["target"].contains(b):
        return KernelTestResult(False, False, b, {}, "b is not in E(Y) cap ker N")
    diff = tuple(x - y for x, y in zip(h, b))
    if not sp["shifted_F"].contains(diff):
        return KernelTestResult(False, False, b, {}, "congruence h = b mod e^{iN}F^l fails")
    Y = sp["Y"]
    Nh = N @ h
    Yh = tuple(x - y * (2 * ell) for x, y in zip(Y @ h, h))
    ok = all(not x for x in Nh) and all(not x for x in Yh)
    return KernelTestResult(ok, True, b, {"Nh": Nh, "Yh_minus_2l_h": Yh}, "conclusion holds" if ok else "counterexample")


def _solve_b(sp, h):
    T, S = sp["target"], sp["shifted_F"]
    cols = list(T.basis) + list(S.basis)
    if not cols:
        return None if any(h) else tuple(ZERO for _ in h)
    A = Matrix.from_columns(cols, len(h))
    x = A.solve(h)
    if x is None:
        return None
    b = [ZERO] * len(h)
    for c, v in zip(x[: T.dim], T.basis):
        b = [bi + c * vi for bi, vi in zip(b, v)]
    return tuple(b)


def _int_conditions(S: Subspace) -> np.ndarray:
    """Integer rows whose vanishing on a real vector is equivalent to membership in S."""
    ann = S.annihilator()
    rows = []
    for y in ann:
        for part in ([x.re for x in y], [x.im for x in y]):
            if any(part):
                d = 1
                for x in part:
                    d = d * x.denominator // np.gcd(d, x.denominator)
                rows.append([int(x * d) for x in part])
    return np.array(rows, dtype=np.int64).reshape(-1, S.ambient)


def mhs_box_check(M: MixedHodgeData, N, ell: int, box: int = 3) -> dict:
    """Exhaustive check over integral h with |h_i| <= box: every h meeting the hypothesis
    satisfies the conclusion. Membership tests are done exactly on integer conditions."""
    N = _as_matrix(N)
    sp = kernel_lemma_spaces(M, N, ell)
    n = M.ambient
    pts = np.array(list(itertools.product(range(-box, box + 1), repeat=n)), dtype=np.int64)
    hyp = intersect(sp["W"], ssum(sp["target"], sp["shifted_F"]))
    concl = sp["target"]
    Ch = _int_conditions(hyp)
    Cc = _int_conditions(concl)
    in_h = np.all(pts @ Ch.T == 0, axis=1) if Ch.size else np.ones(len(pts), bool)
    in_c = np.all(pts @ Cc.T == 0, axis=1) if Cc.size else np.ones(len(pts), bool)
    bad = pts[in_h & ~in_c]
    return {
        "checked": int(len(pts)),
        "hypothesis": int(in_h.sum()),
        "counterexamples": [tuple(int(x) for x in r) for r in bad],
    }
