import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hodgelocus import degeneration_lab as dl
from hodgelocus import synthetic
from hodgelocus.exact_core import Matrix
from hodgelocus.hodge_core import Diagnostic


@pytest.fixture(scope="module")
def k3_schedule(k3):
    return dl.build_schedule([[1]], ["m"], ["0"], k3.period())


def half_gamma(P):
    return P.replace(gamma=[((1,), P.N[0].scale(Fraction(1, 2)))])


# --- schedules ---------------------------------------------------------------


def test_two_variable_schedule_examples(instances):
    P = instances["i_2var"].period()
    S = dl.build_schedule([[1, 1], [0, 1]], ["m**2", "m"], ["0", "0"], P)
    assert isinstance(S, dl.GrowthSchedule)
    assert S.J == [[0], [1]]
    assert S.T[0] == P.N[0] and S.T[1] == P.N[0] + P.N[1]
    d = dl.build_schedule([[1, 1], [0, 1]], ["m", "m"], ["0", "0"], P)
    assert isinstance(d, Diagnostic) and "t_1/t_2" in d.message


@pytest.mark.parametrize(
    "A,t,match",
    [
        ([[1, 0], [0, 1]], ["m**2", "m"], "support violation"),
        ([[0, 1], [0, 1]], ["m**2", "m"], "J_1 is empty"),
        ([[1, -1], [0, 1]], ["m**2", "m"], "negative"),
        ([[1, 1], [0, 1]], ["-m**2", "m"], "not positive"),
        ([[1, 1]], ["m**2", "m"], "rows"),
    ],
)
def test_schedule_diagnostics(instances, A, t, match):
    d = dl.build_schedule(A, t, ["0", "0"], instances["i_2var"].period())
    assert isinstance(d, Diagnostic) and match in d.message


def test_bounded_indicator():
    ms = dl.geometric_samples(10**4)
    assert dl.is_bounded(ms, [1 + 1 / m for m in ms])
    assert not dl.is_bounded(ms, [math.log(m) ** 3 + m**0.2 for m in ms])
    assert dl.is_bounded(ms, [0.0] * len(ms))


# --- scaling -----------------------------------------------------------------


def test_k3_scaling_limit(k3_schedule):
    rep = dl.scaling_and_limit(k3_schedule)
    assert rep.R.Ys[0] == Matrix.diag([2, 0, -2])
    assert rep.converged and rep.tail < 1e-6
    # one variable: the limit is exp(i N) F
    assert rep.closed_form_distance < 1e-9
    assert rep.commutation_exact and rep.eigen_action_exact
    assert rep.eigen_action_residual < 1e-12
    assert rep.in_D


def test_trivial_splitting_is_identity(k3_schedule):
    R = dl.Rescaling([Matrix.zeros(3, 3)], 3)
    assert R.trivial
    assert np.allclose(R.matrix([123.0]), np.eye(3))
    assert R.exact([5]) == Matrix.identity(3)


def test_inverse_rescaling_grows_polynomially(k3_schedule):
    R = dl.scaling_and_limit(k3_schedule).R
    ts = [10.0, 100.0, 1000.0]
    norms = [np.linalg.norm(R.inverse([t]), 2) for t in ts]
    slope = np.polyfit(np.log(ts), np.log(norms), 1)[0]
    assert abs(slope - 1) < 1e-9  # the largest eigenvalue of Y is 2
    for t in ts:
        assert np.allclose(R.matrix([t]) @ R.inverse([t]), np.eye(3))


def test_position_is_invariant_under_scaling(k3_schedule):
    R = dl.scaling_and_limit(k3_schedule).R
    assert R.position([0, 0, 1]) == (-2,)
    assert R.position([1, 0, 0]) == (2,)
    for h in ([0, 3, -2], [1, 1, 1], [0, 0, 5]):
        for c in (-3, 2, 7):
            assert R.position([c * x for x in h]) == R.position(h)


@pytest.mark.parametrize("m", [10, 100, 1000])
def test_rescaling_is_an_isometry_of_norms(k3_schedule, m):
    R = dl.scaling_and_limit(k3_schedule).R
    for h in ([0, 1, 1], [1, -2, 3]):
        a, b = dl.hodge_norm_both(k3_schedule, R, m, h)
        assert abs(a - b) <= 1e-9 * max(1.0, a)


# --- harmless sequences ------------------------------------------------------


def test_harmless_examples(k3_schedule):
    c = dl.harmless_decompose(k3_schedule, lambda m: np.exp(-m) * np.array([1, 0, 0]) + np.array([0, 0, 1]))
    assert c.accepted
    assert abs(c.alpha - 0.99) < 1e-6
    bad = dl.harmless_decompose(k3_schedule, ["0", "1", "0"])
    assert not bad.accepted and "no decay rate" in bad.reason
    zero = dl.harmless_decompose(k3_schedule, ["0", "0", "0"])
    assert zero.accepted and zero.alpha == math.inf
    growing = dl.harmless_decompose(k3_schedule, ["0", "0", "m"])
    assert not growing.accepted and "unbounded" in growing.reason


def test_transports_preserve_harmlessness(k3, k3_schedule):
    zero = dl.harmless_decompose(k3_schedule, ["0", "0", "0"])
    assert dl.harmless_transport(k3_schedule, zero, "expZN").accepted
    c = dl.harmless_decompose(k3_schedule, lambda m: np.exp(-m) * np.array([1, 0, 0]) + np.array([0, 0, 1]))
    out = dl.harmless_transport(k3_schedule, c, "expZN")
    assert out.accepted and 0 < out.alpha < c.alpha
    Sg = dl.build_schedule([[1]], ["m"], ["0"], half_gamma(k3.period()))
    cg = dl.harmless_decompose(Sg, lambda m: np.exp(-m) * np.array([1, 0, 0]))
    out = dl.harmless_transport(Sg, cg, "expGamma")
    assert out.accepted and out.alpha <= 2 * math.pi
    with pytest.raises(ValueError, match="not certified"):
        dl.harmless_transport(k3_schedule, dl.harmless_decompose(k3_schedule, ["0", "1", "0"]), "expZN")


def test_canonical_b_satisfies_congruence(k3_schedule):
    rep = dl.verify_degeneration(k3_schedule, ["0", "1", "1"])
    h = rep.sections["hypotheses"]
    assert h["b_rule"] == "canonical"
    assert h["congruence_max_residual"] <= h["congruence_tol_max_effective"]


# --- verification ------------------------------------------------------------


@pytest.mark.parametrize(
    "h,verdict",
    [
        (["0", "0", "1"], dl.VERDICT_HOLD),
        (["0", "1", "0"], dl.VERDICT_UNBOUNDED),
        (["0", "0", "m"], dl.VERDICT_UNBOUNDED),
        (["1", "0", "0"], dl.VERDICT_UNBOUNDED),
    ],
)
def test_k3_verdicts(k3_schedule, h, verdict):
    rep = dl.verify_degeneration(k3_schedule, h)
    assert rep.verdict == verdict
    if verdict == dl.VERDICT_UNBOUNDED:
        assert rep.conclusion == dl.NO_CONCLUSION


def test_k3_kernel_class_report(k3_schedule):
    rep = dl.verify_degeneration(k3_schedule, ["0", "0", "1"], K=2)
    s = rep.sections
    assert s["boundedness"]["agree"] and s["boundedness"]["Q_bounded"]
    assert s["stabilization"]["constant_on_tail"] and s["stabilization"]["T_k_h_zero"] == [True]
    assert s["stabilization"]["positive_integers_a"] == [1]
    assert s["limit_e_b"]["holds"]
    tr = s["one_variable_trace"]
    assert tr["step1_hodge_bound"]["holds"] and tr["step3_in_W0"] and tr["step5_Nh_zero_on_tail"]
    assert rep.columns[:3] == ["m", "t1", "hodge_norm"]
    assert rep.to_csv().splitlines()[0] == ",".join(rep.columns)


def test_K_bound_is_a_hypothesis(k3_schedule):
    rep = dl.verify_degeneration(k3_schedule, ["0", "2", "0"], b_rule=["0", "2", "0"], K=1)
    assert not rep.sections["hypotheses"]["Q_within_K"]
    assert rep.verdict == dl.VERDICT_UNBOUNDED


def test_non_integral_sequence_rejected(k3_schedule):
    with pytest.raises(ValueError, match="integral"):
        dl.verify_degeneration(k3_schedule, ["0", "0", "1/2"])


def test_bad_correction_raises_congruence_error(k3_schedule):
    with pytest.raises(dl.CongruenceError):
        dl.verify_degeneration(k3_schedule, ["0", "0", "1"], b_rule=["1", "0", "0"])


@pytest.mark.parametrize("name", ["i_triv", "i_k3", "i_cy5", "i_2var", "odp"])
def test_fixture_sequences_match_expectations(instances, name):
    inst = instances[name]
    s = inst.schedule
    S = dl.build_schedule(s["A"], s["t_rule"], s["w_rule"], inst.period(), Ys=inst.Yk)
    assert isinstance(S, dl.GrowthSchedule)
    for q in inst.sequences:
        rep = dl.verify_degeneration(
            S, q["h_rule"], q.get("b_rule"), K=inst.param("K"), Ys=inst.Yk, m_max=2000, samples=32
        )
        assert rep.verdict == q["expect"], q["name"]


@settings(max_examples=12, deadline=None)
@given(st.integers(0, 10**5))
def test_synthetic_runs_never_fail(seed):
    run = synthetic.random_degeneration_run(seed)
    if run is None:
        return
    S = dl.build_schedule(run.A, run.t_rule, run.w_rule, run.P)
    assert isinstance(S, dl.GrowthSchedule), S
    rep = dl.verify_degeneration(S, run.h_rule, m_max=2000, samples=32)
    assert rep.verdict != dl.VERDICT_FAIL


def test_bounded_oscillation_is_bounded():
    ms = dl.geometric_samples(10**4)
    assert dl.is_bounded(ms, [m % 3 + 1 for m in ms])
    assert not dl.is_bounded(ms, [(m % 3 + 1) * m**0.3 for m in ms])


def test_oscillating_kernel_class_stabilizes_along_a_subsequence(k3_schedule):
    rep = dl.verify_degeneration(k3_schedule, ["0", "0", "m % 3 + 1"], K=2)
    st_ = rep.sections["stabilization"]
    assert rep.verdict == dl.VERDICT_HOLD
    assert not st_["constant_on_tail"] and st_["distinct_values_on_tail"] == 3
    assert st_["T_k_zero_on_all_tail_values"]
    assert "finitely many values" in rep.conclusion


def test_unbounded_pairing_without_K_is_a_hypothesis_failure(instances):
    inst = instances["odp"]
    s = inst.schedule
    S = dl.build_schedule(s["A"], s["t_rule"], s["w_rule"], inst.period())
    rep = dl.verify_degeneration(S, ["m", "0", "0"])
    assert not rep.sections["boundedness"]["Q_bounded"]
    assert rep.verdict == dl.VERDICT_UNBOUNDED
