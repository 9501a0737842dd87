"""Acceptance suite: ten desk-scale checks, one printed PASS/FAIL line each.

Run alone with ``pytest tests/test_acceptance.py -s`` or ``python3 tests/test_acceptance.py``.
"""

import itertools
import sys
import time
from fractions import Fraction

import numpy as np
import pytest

from hodgelocus import degeneration_lab as dl
from hodgelocus import synthetic
from hodgelocus.cli import base_structure
from hodgelocus.exact_core import Subspace, conjugate
from hodgelocus.extended_locus import binomials_vanish_on_parametrization, closure_equation_system, sampling_certificate
from hodgelocus.filtrations import MixedHodgeData, check_weight_axioms, mhs_box_check, weight_filtration
from hodgelocus.hodge_core import (
    box_radius,
    brute_force_class_values,
    enumerate_bounded_classes,
    hodge_norm2_many,
)
from hodgelocus.instance import fixture_names, load_fixture
from hodgelocus.orbits import derivative_identity_residual, horizontality_check

FIXTURES = fixture_names()

# collected for the pytest terminal summary (see conftest.py)
LINES = {}


def report(n, ok, detail, echo=False):
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'} {detail}"
    LINES[n] = line
    if echo:
        print(line, flush=True)
    return ok


# --- 1 -----------------------------------------------------------------------


def criterion_1():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    checked = 0
    bad = []
    for i in range(200):
        hs = synthetic.random_polarized_hs(rng, rank=int(rng.integers(1, 7)))
        K, R = int(rng.integers(0, 7)), int(rng.integers(0, 3))
        hs_list = enumerate_bounded_classes(hs, K, R)
        for h, n2 in zip(hs_list, hodge_norm2_many(hs, hs_list)):
            checked += 1
            if not n2 <= K + 4 * R * R:
                bad.append((i, h))
    elapsed = time.perf_counter() - t0
    ok = not bad and elapsed < 60
    return ok, f"200 structures, {checked} classes, {len(bad)} violations, {elapsed:.1f}s (limit 60s)"


# --- 2 -----------------------------------------------------------------------


def criterion_2():
    mismatches = 0
    cases = 0
    for name in FIXTURES:
        hs = base_structure(load_fixture(name))[0]
        # one exhaustive scan at the largest parameters, filtered down for the rest
        box = box_radius(hs, 10 + 4 * 16)
        vals = brute_force_class_values(hs, 10, 4, box)
        for K, R in itertools.product(range(11), range(5)):
            want = sorted(h for h, (q, e) in vals.items() if abs(q) <= K and e <= R * R)
            cases += 1
            if enumerate_bounded_classes(hs, K, R) != want:
                mismatches += 1
    return mismatches == 0, f"{len(FIXTURES)} fixtures x {cases // len(FIXTURES)} (K, R) pairs, {mismatches} discrepancies"


# --- 3 -----------------------------------------------------------------------


def criterion_3():
    rng = np.random.default_rng(3)
    fails = 0
    for seed in range(100):
        model = synthetic.random_nilpotent_orbit(seed, variables=2)
        N1, N2 = model.P.N
        W = weight_filtration([N1, N2])
        for _ in range(5):
            c = [Fraction(int(rng.integers(1, 10)), int(rng.integers(1, 5))) for _ in range(2)]
            T = N1.scale(c[0]) + N2.scale(c[1])
            if check_weight_axioms(W, T) is not None or weight_filtration([N1, N2], c) != W:
                fails += 1
    return fails == 0, f"100 commuting pairs x 5 cone points, {fails} failures"


# --- 4 -----------------------------------------------------------------------


def reconstructs(M):
    n = M.ambient
    for w in M.W.indices():
        parts = [v for (p, q), S in M.I.items() if p + q <= w for v in S.basis]
        if Subspace(parts, n) != M.W.W(w):
            return False
    lo, hi = M.F.range()
    for k in range(lo, hi + 2):
        parts = [v for (p, q), S in M.I.items() if p >= k for v in S.basis]
        if Subspace(parts, n) != M.F.F(k):
            return False
    if M.r_split:
        return all(conjugate(S) == M.I[(q, p)] for (p, q), S in M.I.items())
    return True


def criterion_4():
    fails = 0
    structures = [load_fixture(n).period().limit_mhs() for n in FIXTURES]
    structures += [synthetic.random_nilpotent_orbit(1000 + s).P.limit_mhs() for s in range(100)]
    for M in structures:
        if not isinstance(M, MixedHodgeData) or not reconstructs(M):
            fails += 1
    return fails == 0, f"{len(structures)} structures ({len(FIXTURES)} fixtures + 100 random), {fails} failures"


# --- 5 -----------------------------------------------------------------------


def criterion_5():
    horiz = [n for n in FIXTURES if not horizontality_check(load_fixture(n).period()).passed]
    P = load_fixture("i_cy5").period()
    Pg = P.replace(gamma=[((1,), P.N[0].scale(Fraction(1, 2)))])
    worst = 0.0
    for Pk in (P, Pg):
        for v in Pk.F.basis(2):
            for z in (0.2 + 1.5j, -0.4 + 2j, 0.1 + 3j):
                worst = max(worst, derivative_identity_residual(Pk, v, 0, [z]))
    ok = not horiz and worst < 1e-9
    return ok, f"horizontality failures {horiz}, max derivative-identity residual {worst:.2e} (limit 1e-9)"


# --- 6 -----------------------------------------------------------------------


def criterion_6():
    cases = [("i_k3", [0, 1, 0]), ("i_2var", [0, 1, 0]), ("i_cy5", [0, 0, 1, 0, 0])]
    worst = 0.0
    fails = []
    for name, h in cases:
        cs = closure_equation_system(load_fixture(name).period(), h, samples=5)
        cert = sampling_certificate(cs, samples=200, seed=6, tol=1e-8)
        worst = max([worst, *cert["max_residual"].values()])
        if not cert["passed"] or not binomials_vanish_on_parametrization(cs):
            fails.append(name)
    return not fails, f"200 samples on {len(cases)} fixtures, max residual {worst:.2e} (limit 1e-8), failures {fails}"


# --- 7 -----------------------------------------------------------------------


def criterion_7():
    counter = 0
    tested = 0
    hyp = 0
    items = []
    for name in FIXTURES:
        P = load_fixture(name).period()
        M = P.limit_mhs()
        if isinstance(M, MixedHodgeData) and M.r_split:
            items.append((M, P.N))
    for seed in range(40):
        M, model, _ = synthetic.random_r_split_mhs(seed)
        items.append((M, model.P.N))
    for M, Ns in items:
        for N in Ns:
            for ell in range(-3, 4):
                out = mhs_box_check(M, N, ell, box=3)
                tested += 1
                hyp += out["hypothesis"]
                counter += len(out["counterexamples"])
    return counter == 0, f"{len(items)} R-split structures, {tested} (N, l) checks, {hyp} admissible h, {counter} counterexamples"


# --- 8 -----------------------------------------------------------------------


def criterion_8():
    P = load_fixture("i_k3").period()
    S = dl.build_schedule([[1]], ["m"], ["0"], P)
    rep = dl.scaling_and_limit(S, m_max=10**4, tol=1e-6)
    ok = (
        rep.tail < 1e-6
        and rep.closed_form_distance < 1e-6
        and rep.eigen_action_exact
        and rep.commutation_exact
    )
    return ok, (
        f"tail {rep.tail:.2e}, distance to exp(iN)F {rep.closed_form_distance:.2e} (limit 1e-6), "
        f"eigenvalue action exact {rep.eigen_action_exact}, commutation exact {rep.commutation_exact}"
    )


# --- 9 -----------------------------------------------------------------------


def _fixture_verdicts(m_max=10**4):
    out = {}
    for name in FIXTURES:
        inst = load_fixture(name)
        s = inst.schedule
        S = dl.build_schedule(s["A"], s["t_rule"], s["w_rule"], inst.period(), m_max=m_max, Ys=inst.Yk)
        for q in inst.sequences:
            r = dl.verify_degeneration(S, q["h_rule"], q.get("b_rule"), K=inst.param("K"), Ys=inst.Yk, m_max=m_max)
            out[(name, q["name"])] = (r.verdict, q["expect"], r.to_json())
    return out


def criterion_9():
    np.random.seed(0)
    first = _fixture_verdicts()
    wrong = [k for k, (v, e, _) in first.items() if v != e]
    # designed negative controls on i_k3
    P = load_fixture("i_k3").period()
    S = dl.build_schedule([[1]], ["m"], ["0"], P)
    controls = {"e_1": ["1", "0", "0"], "e_1 (0-based)": ["0", "1", "0"], "m*e_2": ["0", "0", "m"]}
    neg = {k: dl.verify_degeneration(S, h, K=2).verdict for k, h in controls.items()}
    wrong += [k for k, v in neg.items() if v != dl.VERDICT_UNBOUNDED]
    # nothing in the lab consumes global randomness, so a reseeded run must reproduce the reports
    np.random.seed(12345)
    second = _fixture_verdicts()
    same = all(first[k][2] == second[k][2] for k in first)
    ok = not wrong and same
    return ok, f"{len(first)} fixture sequences + {len(neg)} negative controls, mismatches {wrong}, deterministic {same}"


# --- 10 ----------------------------------------------------------------------

BOUNDED_FACTORS = ["1", "2", "m % 3 + 1", "2 - m % 2", "(-1)**m", "floor(m / 5) % 2 + 1"]


def random_runs(name, count, rng):
    """Randomized sequences h(m) = g(m) h0 with h0 in the common kernel of the N_j and g
    bounded, on randomly rescaled and perturbed schedules; all satisfy the hypotheses."""
    inst = load_fixture(name)
    P = inst.period()
    s = inst.schedule
    ker = [h for h in synthetic.kernel_box(P, 2) if any(h)]
    for _ in range(count):
        c = int(rng.integers(2, 9))
        t = [f"{c}/4*({x})" for x in s["t_rule"]]
        a = int(rng.integers(0, 4))
        w = [f"({x}) + {a}/16*cos(m)" for x in s["w_rule"]]
        S = dl.build_schedule(s["A"], t, w, P, m_max=2000, Ys=inst.Yk)
        h0 = ker[int(rng.integers(len(ker)))]
        g = BOUNDED_FACTORS[int(rng.integers(len(BOUNDED_FACTORS)))]
        yield S, [f"({x})*({g})" for x in h0], inst


def criterion_10():
    rng = np.random.default_rng(10)
    runs = disagree = outside = 0
    for name in FIXTURES:
        for S, h, inst in random_runs(name, 50, rng):
            assert isinstance(S, dl.GrowthSchedule), S
            r = dl.verify_degeneration(S, h, Ys=inst.Yk, m_max=2000, samples=32)
            runs += 1
            if r.verdict == dl.VERDICT_UNBOUNDED:
                outside += 1
            if not r.sections["boundedness"]["agree"]:
                disagree += 1
    ok = disagree == 0 and outside == 0
    return ok, (
        f"{runs} runs ({len(FIXTURES)} fixtures x 50), {disagree} disagreements, "
        f"{outside} runs outside the hypotheses, exponent threshold {dl.BOUNDED_EXPONENT}"
    )


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
            criterion_6, criterion_7, criterion_8, criterion_9, criterion_10]


@pytest.mark.parametrize("n", range(1, 11))
def test_criterion(n):
    try:
        ok, detail = CRITERIA[n - 1]()
    except Exception as exc:
        report(n, False, f"raised {type(exc).__name__}: {exc}")
        raise
    assert report(n, ok, detail), detail


if __name__ == "__main__":
    results = [report(i + 1, *f(), echo=True) for i, f in enumerate(CRITERIA)]
    sys.exit(0 if all(results) else 1)
