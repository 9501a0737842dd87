import numpy as np
import pytest

from hodgelocus import synthetic
from hodgelocus.exact_core import Matrix
from hodgelocus.filtrations import check_weight_axioms, weight_filtration
from hodgelocus.hodge_core import PureHodgeStructure, validate_polarized_hs
from hodgelocus.orbits import evaluate_nilpotent_exact, horizontality_check


def test_generators_are_deterministic():
    a = synthetic.random_polarized_hs(7)
    b = synthetic.random_polarized_hs(7)
    assert a.lattice.Q == b.lattice.Q
    assert a.filtration.levels() == b.filtration.levels()


@pytest.mark.parametrize("seed", range(8))
def test_random_hs_is_polarized(seed):
    hs = synthetic.random_polarized_hs(seed)
    assert isinstance(hs, PureHodgeStructure)
    assert 1 <= hs.rank <= 6
    assert sum(hs.hodge_numbers().values()) == hs.rank
    assert hs.lattice.Q.det() != 0


def test_unimodular_change():
    U = synthetic.random_unimodular(np.random.default_rng(1), 4)
    assert abs(U.det().re) == 1 and U.det().im == 0
    assert all(x.im == 0 and x.re.denominator == 1 for r in U.rows for x in r)


@pytest.mark.parametrize("a", [0, 1, 2, 4])
def test_sl2_block(a):
    N, Q, types = synthetic.sl2_block(a)
    n = a + 1
    assert len(types) == n
    assert (N.transpose() @ Q + Q @ N).is_zero()
    P = Matrix.identity(n)
    for _ in range(n):
        P = P @ N
    assert P.is_zero()


@pytest.mark.parametrize("seed", range(6))
@pytest.mark.parametrize("variables", [1, 2])
def test_random_orbits_are_valid(seed, variables):
    model = synthetic.random_nilpotent_orbit(seed, variables=variables)
    P = model.P
    assert P.n == variables
    assert horizontality_check(P).passed
    W = weight_filtration(P.N)
    T = P.N[0]
    for Nj in P.N[1:]:
        T = T + Nj
    assert check_weight_axioms(W, T) is None
    hs = validate_polarized_hs(P.lattice, evaluate_nilpotent_exact(P, [synthetic.I] * P.n))
    assert isinstance(hs, PureHodgeStructure)


@pytest.mark.parametrize("seed", range(4))
def test_degeneration_runs_use_kernel_classes(seed):
    run = synthetic.random_degeneration_run(seed + 1)
    if run is None:
        pytest.skip("no kernel vector in the sampled model")
    h = [int(x) for x in run.h_rule]
    for Nj in run.P.N:
        assert not any(Nj.apply(h))


def test_flat_run():
    run = synthetic.flat_hodge_run(0)
    assert run.P.rank == 1 and run.P.n == 1
