import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hodgelocus import synthetic
from hodgelocus.exact_core import GQ, Matrix, Subspace, commutator, conjugate
from hodgelocus.filtrations import (
    MixedHodgeData,
    check_weight_axioms,
    deligne_splitting,
    eigenspaces,
    gpq_components,
    grading_operator,
    grading_operators_multi,
    in_gpq,
    mhs_box_check,
    mhs_kernel_test,
    q_compatibility_failure,
    weight_filtration,
    weight_filtration_of,
)
from hodgelocus.hodge_core import Diagnostic, HodgeFiltration

I = GQ(0, 1)
E = [(1, 0, 0), (0, 1, 0), (0, 0, 1)]


def span(*vs, n=3):
    return Subspace(list(vs), n)


def test_zero_operator_is_pure():
    W = weight_filtration([Matrix.zeros(3, 3)])
    assert W.W(-1).dim == 0 and W.W(0).dim == 3


def test_k3_weight_filtration(k3):
    N = k3.period().N[0]
    W = weight_filtration([N])
    assert W.W(-2) == W.W(-1) == span(E[2])
    assert W.W(0) == W.W(1) == span(E[1], E[2])
    assert W.W(2).dim == 3 and W.W(-3).dim == 0
    assert check_weight_axioms(W, N) is None


def test_axiom_checker_rejects_wrong_filtration(k3):
    N = k3.period().N[0]
    W = weight_filtration_of(N)
    assert isinstance(check_weight_axioms(W.shifted(1), N), Diagnostic)


def test_cone_independence_two_operators(instances):
    N1, N2 = instances["i_2var"].period().N
    assert weight_filtration([N1, N2], [1, 1]) == weight_filtration([N1, N2], [2, 3])


def test_input_errors():
    with pytest.raises(ValueError):
        weight_filtration([Matrix.identity(2)])
    A = Matrix([[0, 1, 0], [0, 0, 0], [0, 0, 0]])
    B = Matrix([[0, 0, 0], [0, 0, 1], [0, 0, 0]])
    with pytest.raises(ValueError):
        weight_filtration([A, B])
    with pytest.raises(ValueError):
        weight_filtration([A], [0])


def test_k3_deligne_splitting(k3):
    P = k3.period()
    M = deligne_splitting(P.weight(), P.F)
    assert isinstance(M, MixedHodgeData) and M.r_split
    assert M.I == {(1, 1): span(E[0]), (0, 0): span(E[1]), (-1, -1): span(E[2])}
    Y = grading_operator(M)
    assert Y == Matrix.diag([2, 0, -2])
    N = P.N[0]
    assert commutator(Y, N) == N.scale(-2)


def test_pure_structure_splitting():
    hs = synthetic.random_polarized_hs(5, rank=4)
    W = weight_filtration([Matrix.zeros(4, 4)])
    M = deligne_splitting(W, hs.filtration)
    assert {p: S for (p, q), S in M.I.items()} == hs.components
    assert all(p + q == 0 for p, q in M.I)
    assert grading_operator(M).is_zero()


def test_rotated_filtration_is_not_mixed(k3):
    P = k3.period()
    F = HodgeFiltration({1: [E[2]], 0: [E[1], E[2]], -1: E}, 3)
    d = deligne_splitting(P.weight(), F)
    assert isinstance(d, Diagnostic)
    assert "not a mixed Hodge structure" in d.message


def test_eigenspaces_require_semisimple():
    with pytest.raises(ValueError):
        eigenspaces(Matrix([[0, 1], [0, 0]]))


def test_multi_splitting_validation(instances):
    P = instances["i_2var"].period()
    M = P.limit_mhs()
    Y = grading_operator(M)
    W = P.weight()
    # Y grades W on its own; a second copy of zero keeps the partial sums equal to Y
    assert grading_operators_multi([Y, Matrix.zeros(3, 3)], [W, W]) == [Y, Matrix.zeros(3, 3)]
    with pytest.raises(ValueError, match="does not grade"):
        grading_operators_multi([Matrix.zeros(3, 3)], [W])
    with pytest.raises(ValueError, match="commute"):
        grading_operators_multi([Y, P.N[0]], [W, W])


@pytest.mark.parametrize("name", ["i_triv", "i_k3", "i_cy5", "i_2var", "odp"])
def test_fixture_splitting_identities(instances, name):
    P = instances[name].period()
    M = P.limit_mhs()
    assert isinstance(M, MixedHodgeData)
    _reconstructs(M)
    for Nj in P.N:
        assert in_gpq(M, Nj, -1, -1)
    assert q_compatibility_failure(M, P.lattice.Q) is None


def _reconstructs(M):
    n = M.ambient
    for w in M.W.indices():
        parts = [v for (p, q), S in M.I.items() if p + q <= w for v in S.basis]
        assert Subspace(parts, n) == M.W.W(w)
    lo, hi = M.F.range()
    for k in range(lo, hi + 2):
        parts = [v for (p, q), S in M.I.items() if p >= k for v in S.basis]
        assert Subspace(parts, n) == M.F.F(k)
    if M.r_split:
        for (p, q), S in M.I.items():
            assert conjugate(S) == M.I[(q, p)]


def test_gpq_components_shift_bigrading(k3):
    P = k3.period()
    M = P.limit_mhs()
    rng = np.random.default_rng(0)
    Q = P.lattice.Q
    # random element of the isometry algebra: X = Q^{-1} S with S skew
    S = [[0] * 3 for _ in range(3)]
    for i, j in itertools.combinations(range(3), 2):
        S[i][j] = int(rng.integers(-3, 4))
        S[j][i] = -S[i][j]
    X = Q.inverse() @ Matrix(S)
    comps = gpq_components(M, X)
    total = Matrix.zeros(3, 3)
    for (p, q), C in comps.items():
        total = total + C
        for (a, b), V in M.I.items():
            img = Subspace([C.apply(v) for v in V.basis], 3)
            target = M.I.get((a + p, b + q), Subspace.zero(3))
            assert target.contains_space(img)
    assert total == X


def test_kernel_test_zero_and_box(k3):
    P = k3.period()
    M = P.limit_mhs()
    N = P.N[0]
    assert mhs_kernel_test(M, N, [0, 0, 0], None, 0).passed
    # E_0(Y) meets ker N only in 0, so h = 0 is the only admissible vector at l = 0
    out = mhs_box_check(M, N, 0, box=3)
    assert out["counterexamples"] == [] and out["hypothesis"] == 1
    out = mhs_box_check(M, N, -1, box=3)
    assert out["counterexamples"] == [] and out["hypothesis"] == 7


def test_box_check_agrees_with_pointwise_test(k3):
    # two routes: integer-condition filtering and the exact per-vector test
    P = k3.period()
    M = P.limit_mhs()
    N = P.N[0]
    for ell in (-1, 0, 1):
        out = mhs_box_check(M, N, ell, box=2)
        count = 0
        for h in itertools.product(range(-2, 3), repeat=3):
            r = mhs_kernel_test(M, N, h, None, ell)
            if r.precondition:
                count += 1
                assert r.passed
        assert count == out["hypothesis"]


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10**6), st.lists(st.integers(1, 5), min_size=2, max_size=2))
def test_weight_filtration_properties(seed, coeffs):
    model = synthetic.random_nilpotent_orbit(seed, max_rank=6)
    Ns = model.P.N
    W = weight_filtration(Ns)
    T = Matrix.zeros(model.P.rank, model.P.rank)
    for c, Nj in zip(coeffs, Ns):
        T = T + Nj.scale(Fraction(c, 1 + (c % 3)))
    assert check_weight_axioms(W, T) is None
    assert weight_filtration(Ns, [Fraction(c, 1 + (c % 3)) for c in coeffs[: len(Ns)]]) == W


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10**6))
def test_random_r_split_limits(seed):
    M, model, x = synthetic.random_r_split_mhs(seed)
    assert M.r_split
    _reconstructs(M)
    out = mhs_box_check(M, model.P.N[0], 0, box=1)
    assert out["counterexamples"] == []
