import pytest
from gmpy2 import mpq
from hypothesis import given, settings
from hypothesis import strategies as st

from onlinepack.core import Item, SparseWeightVector
from onlinepack.generators import BigItemAdversary, gen_random, sample_noslack_distribution
from onlinepack.objective import Cardinality
from onlinepack.offline import CapacityError, brute_force_opt, enumerate_opt, verify_claimed_opt


def test_single_item():
    items = [Item(0, SparseWeightVector.uniform([0], mpq(1, 2), 1))]
    res = brute_force_opt(items, Cardinality())
    assert res.best_set == {0} and res.best_value == 1


def test_empty_instance():
    assert brute_force_opt([], Cardinality()).best_value == 0


def test_noslack_d4_optimum_is_d():
    s = sample_noslack_distribution(4, seed=1)
    res = brute_force_opt(s.items, s.objective)
    assert res.best_value == 4
    assert verify_claimed_opt(s.items, s.objective, s.opt_witness, 4)


def test_big_item_full_sequence_optimum():
    adv = BigItemAdversary(4, "1/4")
    while adv.next_item({0}) is not None:
        pass
    assert len(adv.emitted) == 9
    res = brute_force_opt(adv.emitted, adv.objective)
    # eight small items of value sqrt(1/16) = 1/4, all fitting beside each other
    assert res.best_value == 2
    assert res.best_set == frozenset(range(1, 9))


def test_size_guard():
    items = [Item(i, SparseWeightVector.uniform([0], mpq(1, 64), 1)) for i in range(31)]
    with pytest.raises(CapacityError):
        brute_force_opt(items, Cardinality())


def test_random_matches_enumeration_example():
    s = gen_random(10, 5, 2, "1/4", "uniform", seed=7, solve_opt=False)
    assert brute_force_opt(s.items, s.objective).best_value == enumerate_opt(s.items, s.objective).best_value


def test_verify_claimed_opt_rejects_bad_claims():
    items = [Item(i, SparseWeightVector.uniform([0], mpq(3, 4), 1)) for i in range(2)]
    spec = Cardinality()
    assert verify_claimed_opt(items, spec, {0}, 1)
    assert not verify_claimed_opt(items, spec, {0, 1}, 2)  # infeasible
    assert not verify_claimed_opt(items, spec, {0}, 2)  # wrong value
    assert not verify_claimed_opt(items, spec, {5}, 1)  # unknown id


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 11), st.integers(1, 4), st.integers(1, 3),
       st.sampled_from(["unit", "uniform", "coverage"]), st.integers(0, 10**6))
def test_branch_and_bound_equals_enumeration(n, d, k, mode, seed):
    s = gen_random(n, d, min(k, d), "1/10", mode, seed=seed, solve_opt=False)
    bb = brute_force_opt(s.items, s.objective)
    en = enumerate_opt(s.items, s.objective)
    assert bb.best_value == en.best_value
    assert verify_claimed_opt(s.items, s.objective, bb.best_set, bb.best_value)
