import pytest
from gmpy2 import mpq

from onlinepack.core import Item, SparseWeightVector
from onlinepack.generators import gen_random
from onlinepack.naive import STEP, compare_phases, simulate
from onlinepack.objective import Modular


def ab_items():
    return [Item(v, SparseWeightVector.uniform([0], mpq(1, 4), 1)) for v in range(2)]


def test_ab_example():
    steps = simulate(ab_items(), Modular({0: 1, 1: 10}), 1, "3/4")
    assert [s.accepted for s in steps] == [True, True]
    assert steps[1].theta_final == 1


def test_ab_prime_example():
    steps = simulate(ab_items(), Modular({0: 1, 1: mpq(1, 10)}), 1, "3/4")
    assert [s.accepted for s in steps] == [True, False]
    assert steps[1].theta_final == 0


def test_coarse_step_overshoots_by_less_than_a_step():
    # a single item filling a half-full dim stops once it reaches beta
    items = [Item(0, SparseWeightVector.uniform([0], mpq(1, 2), 1)),
             Item(1, SparseWeightVector.uniform([0], mpq(3, 10), 1))]
    spec = Modular({0: 10, 1: mpq(1, 100)})
    pairs = compare_phases(items, spec, 1, "1/4", h=2.0 ** -10)
    (e0, n0), (e1, n1) = pairs
    # the dim reaches beta = 3/4 at theta = 5/6, where the cheap item gives up
    assert e1.theta_final == mpq(5, 6)
    assert 0 <= n1.theta_final - float(e1.theta_final) < 2.0 ** -10


@pytest.mark.parametrize("seed", range(6))
def test_agrees_with_engine(seed):
    s = gen_random(8, 3, 2, ["1/4", "1/2", "3/4"][seed % 3], ["uniform", "unit", "coverage"][seed % 3], seed=seed,
                   solve_opt=False)
    for e, n in compare_phases(s.items, s.objective, 3, ["1/4", "1/2", "3/4"][seed % 3]):
        assert e.accepted == n.accepted
        assert abs(n.theta_final - float(e.theta_final)) <= STEP
