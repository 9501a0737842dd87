import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hodgelocus import numeric
from hodgelocus.exact_core import GQ, Matrix
from hodgelocus.hodge_core import PureHodgeStructure, is_hodge_class, validate_polarized_hs
from hodgelocus.orbits import (
    epsilon_tilde,
    evaluate_nilpotent_exact,
    evaluate_period,
    extension_sections,
    derivative_identity_residual,
    horizontality_check,
    is_nilpotent_in,
    quotient_variation,
    truncate_gamma,
    truncation_defect,
)

I = GQ(0, 1)
TWO_PI = 2 * np.pi


def with_gamma(P, gamma):
    return P.replace(gamma=gamma)


def e_col(n, i):
    return np.eye(n)[:, i]


# --- evaluation --------------------------------------------------------------


def test_period_equivariance(k3):
    P = k3.period()
    z = np.array([0.3 + 1.7j])
    for a in (-2, 1, 3):
        A = numeric.expm_nilpotent(a * P.N[0].to_numpy())
        lhs = evaluate_period(P, z + a).F.F(1)
        rhs = (A @ evaluate_period(P, z).F.F(1).T).T
        assert numeric.grassmann_distance(lhs, rhs) < 1e-12


@pytest.mark.parametrize("y", [1, 2, 5])
def test_k3_polarized_on_imaginary_axis(k3, y):
    hs = validate_polarized_hs(k3.lattice(), evaluate_nilpotent_exact(k3.period(), [I * y]))
    assert isinstance(hs, PureHodgeStructure)


def test_lower_half_plane_rejected(k3):
    with pytest.raises(ValueError):
        evaluate_period(k3.period(), [-1j])


# --- horizontality -----------------------------------------------------------


def test_horizontality_examples(k3, instances):
    assert horizontality_check(k3.period()).passed
    P2 = instances["i_2var"].period()
    X = Matrix([[0, 0, 0], [0, 0, 0], [0, 1, 0]])  # [N, X] != 0
    good = horizontality_check(with_gamma(P2, [((1, 0), X)]))
    assert good.j == 2  # s_1 X commutes with N_1 modulo s_1; the witness index is 1-based
    bad = horizontality_check(with_gamma(P2, [((0, 1), X)]))
    assert not bad.passed and bad.j == 1 and bad.monomial == (0, 1)


@pytest.mark.parametrize("name", ["i_triv", "i_k3", "i_cy5", "i_2var", "odp"])
def test_fixtures_are_horizontal(instances, name):
    assert horizontality_check(instances[name].period()).passed


# --- sections ----------------------------------------------------------------


def test_plain_section_without_gamma(k3):
    P = k3.period()
    sig = extension_sections(P, [1, 0, 0])
    z = 0.4 + 2j
    assert np.allclose(sig([z]), [1, z, z * z / 2])


def test_pole_section_cy5(cy5):
    P = cy5.period()
    sig = extension_sections(P, [1, 0, 0, 0, 0], "pole", 0)
    z = 0.25 + 1.5j
    expect = numeric.expm_nilpotent(z * P.N[0].to_numpy()) @ e_col(5, 1) / np.exp(2j * np.pi * z)
    assert np.allclose(sig([z]), expect, rtol=1e-12)
    with pytest.raises(ValueError):
        extension_sections(P, [0, 0, 0, 1, 0], "pole", 0)


def test_derivative_identity_cy5(cy5):
    P = cy5.period()
    assert derivative_identity_residual(P, [1, 0, 0, 0, 0], 0, [2j]) < 1e-9
    Pg = with_gamma(P, [((1,), P.N[0].scale(Fraction(1, 2)))])
    assert derivative_identity_residual(Pg, [1, 0, 0, 0, 0], 0, [2j]) < 1e-9


def test_sections_stay_in_hodge_filtration(cy5):
    P = cy5.period()
    for p in (1, 2):
        for v in P.F.basis(p):
            sig = extension_sections(P, v)
            for z in (0.1 + 1j, -0.7 + 2.5j):
                Fp = evaluate_period(P, [z]).F.F(p)
                assert numeric.in_span_residual(Fp, sig([z])) < 1e-10


# --- epsilon tilde -----------------------------------------------------------


def test_epsilon_tilde_zero_and_constant(k3):
    P = k3.period()
    e = epsilon_tilde(P, [0.2 + 1j], [0, 0, 0])
    assert not e.F1.any()
    for z in (0.1 + 1j, 3 + 7j):
        e = epsilon_tilde(P, [z], [0, 0, 1])
        assert np.allclose(e.F1, [1.0])
        assert e.pole == {}


@settings(max_examples=30, deadline=None)
@given(st.integers(-3, 3), st.lists(st.integers(-3, 3), min_size=5, max_size=5), st.floats(0.5, 3), st.floats(-1, 1))
def test_deck_invariance(a, h, y, x):
    from hodgelocus.instance import load_fixture

    P = load_fixture("i_cy5").period()
    z = np.array([x + 1j * y])
    ha = numeric.expm_nilpotent(a * P.N[0].to_numpy()) @ np.array(h, float)
    e1 = epsilon_tilde(P, z, h)
    e2 = epsilon_tilde(P, z + a, ha)
    assert np.allclose(e1.F1, e2.F1, atol=1e-9)
    for k in e1.pole:
        assert np.allclose(e1.pole[k], e2.pole[k], atol=1e-9)


@pytest.mark.parametrize("name", ["i_k3", "i_cy5", "i_2var"])
def test_epsilon_zero_set_matches_hodge_classes(instances, name):
    inst = instances[name]
    P = inst.period()
    z = [GQ(0, 1)] * P.n
    hs = validate_polarized_hs(P.lattice, evaluate_nilpotent_exact(P, z))
    for h in itertools.product(range(-1, 2), repeat=P.rank):
        e = epsilon_tilde(P, [1j] * P.n, h)
        assert (np.abs(e.F1).max() < 1e-12) == is_hodge_class(hs, h)


# --- truncation --------------------------------------------------------------


def test_truncation_identities(k3):
    P = with_gamma(k3.period(), [((1,), k3.period().N[0].scale(Fraction(1, 2)))])
    assert truncate_gamma(P, []).gamma == P.gamma
    assert truncate_gamma(P, [0]).gamma == {}
    assert is_nilpotent_in(truncate_gamma(P, [0]), [0])
    assert not is_nilpotent_in(P, [0])


def test_truncation_defect_decays_exponentially(k3):
    P = with_gamma(k3.period(), [((1,), k3.period().N[0].scale(Fraction(1, 2)))])
    ts = np.arange(1.0, 6.0)
    d = np.array([truncation_defect(P, [0], [1j * t]) for t in ts])
    alpha = -np.polyfit(ts, np.log(d), 1)[0]
    assert alpha > 0
    assert abs(alpha - TWO_PI) < 0.3  # the defect is |s| = e^{-2 pi t} up to polynomial factors


# --- quotients ---------------------------------------------------------------


def test_quotient_trivial(instances):
    P = instances["i_triv"].period()
    q = quotient_variation(P, 0)
    assert q.period.rank == 1
    assert q.period.lattice.Q == P.lattice.Q


@pytest.mark.parametrize("ell", [0, 2, -2])
def test_k3_quotients_rank_one(k3, ell):
    q = quotient_variation(k3.period(), ell)
    assert q.period.rank == 1
    assert all(M.is_zero() for M in q.period.N)
    hs = validate_polarized_hs(q.period.lattice, q.period.F)
    assert isinstance(hs, PureHodgeStructure)


def test_quotient_errors(k3):
    P = with_gamma(k3.period(), [((1,), k3.period().N[0])])
    with pytest.raises(ValueError, match="nilpotent orbit"):
        quotient_variation(P, 0)
    with pytest.raises(ValueError):
        quotient_variation(k3.period(), 4)


def test_quotient_depends_only_on_remaining_variables(instances):
    P = instances["i_2var"].period()
    q = quotient_variation(P, 0, J1=[0])
    Pq = q.period
    base = evaluate_period(Pq, [1j, 2j]).F.F(0)
    for z1 in (0.3 + 1j, 5j):
        other = evaluate_period(Pq, [z1, 2j]).F.F(0)
        assert numeric.grassmann_distance(base, other) < 1e-12
    for z in ([1j, 1j], [0.5 + 2j, 0.2 + 3j]):
        Fz = evaluate_period(Pq, z).F
        assert isinstance(validate_polarized_hs(Pq.lattice, Fz), PureHodgeStructure)
