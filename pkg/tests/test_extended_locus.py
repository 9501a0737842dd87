from fractions import Fraction

import numpy as np
import pytest

from hodgelocus.exact_core import GQ, Matrix
from hodgelocus.extended_locus import (
    ClosureHypothesisError,
    binomials_vanish_on_parametrization,
    brute_force_candidates,
    closure_equation_system,
    closure_residuals,
    limit_hodge_candidates,
    positive_stabilizer_vector,
    recover_v,
    sampling_certificate,
    stabilizer_lattice,
)


def test_stabilizer_lattice_examples(k3, instances):
    P = instances["i_2var"].period()
    assert stabilizer_lattice(P.N, [0, 0, 1]).rank == 2
    assert stabilizer_lattice(P.N, [0, 1, 0]).basis == ((2, -1),)
    A = Matrix([[0, 0, 0], [1, 0, 0], [0, 0, 0]])
    B = Matrix([[0, 0, 0], [0, 0, 0], [1, 0, 0]])
    assert stabilizer_lattice([A, B], [1, 0, 0]).rank == 0


def test_identity_case_has_no_equations(k3):
    cs = closure_equation_system(k3.period(), [0, 0, 1])
    assert cs.r == 0
    assert cs.binomials.binomials == []
    assert cs.certificate["passed"]


def test_two_variable_system(instances):
    P = instances["i_2var"].period()
    cs = closure_equation_system(P, [0, 1, 0])
    assert cs.r == 1
    assert cs.closure1 == [1]
    assert [b.u for b in cs.binomials.binomials] == [(1, -1)] or len(cs.binomials.binomials) == 1
    # N'_1 h independent, N'_2 h = 0
    assert any(cs.Nprime[0] @ cs.h)
    assert not any(cs.Nprime[1] @ cs.h)
    assert cs.certificate["passed"]
    assert binomials_vanish_on_parametrization(cs)


def test_phi_normalization(instances):
    P = instances["i_2var"].period()
    cs = closure_equation_system(P, [0, 1, 0])
    v = cs.Nprime[0] @ cs.h
    c = GQ(Fraction(3, 7), Fraction(-1, 2))
    # phi_j(sum_k c_k N'_k h) = -c_j
    val = sum((f * (c * x) for f, x in zip(cs.phi[0], v)), GQ(0))
    assert val == -c


def test_cy5_second_order_closure(cy5):
    cs = closure_equation_system(cy5.period(), [0, 0, 1, 0, 0])
    assert cs.closure1 == [1, 2]
    assert cs.certificate["passed"]


def test_hypothesis_failure_is_reported(k3):
    with pytest.raises(ClosureHypothesisError, match="N_1 h"):
        closure_equation_system(k3.period(), [1, 0, 0])


@pytest.mark.parametrize("name,h", [("i_k3", [0, 1, 0]), ("i_2var", [0, 1, 0]), ("i_cy5", [0, 0, 1, 0, 0])])
def test_sampled_points_satisfy_equations(instances, name, h):
    cs = closure_equation_system(instances[name].period(), h, samples=20)
    cert = sampling_certificate(cs, samples=200, seed=11, tol=1e-8)
    assert cert["passed"], cert["max_residual"]
    assert binomials_vanish_on_parametrization(cs)


def test_residuals_detect_a_perturbed_point(instances):
    cs = closure_equation_system(instances["i_2var"].period(), [0, 1, 0], samples=5)
    s, v, _, _ = recover_v(cs, np.array([0.2 + 0.7j, -0.1 + 0.4j]))
    assert max(closure_residuals(cs, s, v).values()) < 1e-8
    bad = closure_residuals(cs, s * np.array([1.0, 1.3]), v)
    assert max(bad.values()) > 1e-3


def test_reparametrization_invariance(instances):
    P = instances["i_2var"].period()
    h = [0, 1, 0]
    a = closure_equation_system(P, h, w=[0, 0], samples=5)
    # exp(2 N_1) is integral, so w and w + (2, 0) give equivalent systems
    b = closure_equation_system(P, h, w=[2, 0], samples=5)
    rng = np.random.default_rng(3)
    for _ in range(20):
        z = rng.uniform(-1, 1, 2) + 1j * rng.uniform(0.3, 1.5, 2)
        for sys_, other in ((a, b), (b, a)):
            s, v, _, _ = recover_v(sys_, z)
            assert max(closure_residuals(other, s, v).values()) < 1e-8


def test_positive_stabilizer(instances):
    P = instances["i_2var"].period()
    assert positive_stabilizer_vector(P, [0, 1, 0]) is None  # a_1 + 2 a_2 = 0 has no positive solution
    assert positive_stabilizer_vector(P, [0, 0, 1]) == (1, 1)


def test_k3_candidates_are_multiples_of_e2(k3):
    got = limit_hodge_candidates(k3.period(), 4, R=2)
    # the limit epsilon of c e2 is the constant c, so the R-bound keeps |c| <= 2
    assert [h for h, _ in got] == [(0, 0, c) for c in (-2, -1, 0, 1, 2)]


def test_cy5_candidates_match_brute_force(cy5):
    P = cy5.period()
    assert limit_hodge_candidates(P, 2, R=1, box=4) == brute_force_candidates(P, 2, R=1, box=4)


@pytest.mark.parametrize("name", ["i_triv", "i_k3", "i_cy5", "i_2var", "odp"])
def test_candidates_symmetric_and_contain_zero(instances, name):
    P = instances[name].period()
    got = {h for h, _ in limit_hodge_candidates(P, 2, R=1, box=2)}
    assert tuple([0] * P.rank) in got
    assert {tuple(-x for x in h) for h in got} == got
