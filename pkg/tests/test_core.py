import math

import pytest
from gmpy2 import mpq
from hypothesis import given
from hypothesis import strategies as st

from onlinepack.core import (
    INF,
    FractionalState,
    Item,
    ParameterError,
    Q,
    SparseWeightVector,
    density,
    is_feasible,
    make_params,
    max_sparsity,
    sqrt_upper,
)
from onlinepack.generators import noslack_weights


def item(vid, coords, d=1):
    return Item(vid, SparseWeightVector.from_mapping({i: Q(w) for i, w in coords.items()}, d))


# --- scalars and vectors


def test_q_accepts_decimal_and_fraction_strings():
    assert Q("0.19") == mpq(19, 100)
    assert Q("3/4") == mpq(3, 4)
    assert Q((1, 3)) == mpq(1, 3)
    assert Q(2) == 2


def test_sparse_vector_rejects_bad_entries():
    with pytest.raises(ValueError):
        SparseWeightVector((1, 0), (mpq(1, 2), mpq(1, 2)), 3)  # not increasing
    with pytest.raises(ValueError):
        SparseWeightVector((0,), (mpq(0),), 3)  # zero weight listed
    with pytest.raises(ValueError):
        SparseWeightVector((0,), (mpq(3, 2),), 3)
    with pytest.raises(ValueError):
        SparseWeightVector((3,), (mpq(1, 2),), 3)  # dim out of range


def test_sparse_vector_accessors():
    v = SparseWeightVector.from_mapping({4: mpq(1, 4), 1: mpq(1, 2)}, 6)
    assert v.dims == (1, 4)
    assert v.sparsity() == 2
    assert v.get(4) == mpq(1, 4) and v.get(0) == 0
    assert v.max_weight() == mpq(1, 2)
    assert v.scaled(mpq(1, 2)).as_dict() == {1: mpq(1, 4), 4: mpq(1, 8)}
    assert max_sparsity([Item(0, v)]) == 2


# --- density


def test_density_examples():
    assert density(item(0, {0: "1/2"}), 1, 0) == 2
    assert density(item(0, {0: "1/2"}, d=2), 1, 1) == INF
    assert density(item(0, {0: "1/4"}), 0, 0) == 0


def test_infinite_density_compares_above_rationals():
    assert INF > mpq(10**40)


@given(st.integers(1, 1000), st.integers(1, 1000), st.integers(0, 50))
def test_density_antitone_in_weight_linear_in_value(a, b, value):
    lo, hi = sorted((mpq(a, 1000), mpq(b, 1000)))
    assert density(item(0, {0: lo}), value, 0) >= density(item(0, {0: hi}), value, 0)
    assert density(item(0, {0: lo}), 2 * value, 0) == 2 * density(item(0, {0: lo}), value, 0)


# --- feasibility


def test_feasibility_examples():
    assert is_feasible([item(0, {0: "1/2"}), item(1, {0: "1/2"})], 1)
    assert not is_feasible([item(0, {0: "3/4"}), item(1, {0: "3/8"})], 1)


def test_noslack_optimal_items_are_feasible():
    d = 6
    sigma = [5, 1, 2, 0, 4, 3]
    opt = [Item(t, SparseWeightVector.from_mapping(noslack_weights(d, sigma, t, 1), d)) for t in range(1, d + 1)]
    assert is_feasible(opt, d)


@given(st.lists(st.integers(1, 16), min_size=1, max_size=6), st.data())
def test_feasibility_is_monotone(nums, data):
    items = [item(v, {0: mpq(w, 16)}) for v, w in enumerate(nums)]
    sub = data.draw(st.lists(st.sampled_from(items), unique_by=lambda it: it.id))
    if is_feasible(items, 1):
        assert is_feasible(sub, 1)


# --- parameters


def test_params_perfect_square():
    p = make_params("3/4")
    assert (p.beta, p.alpha, p.gamma) == (mpq(1, 4), mpq(1, 2), mpq(1, 4))


def test_params_decimal():
    p = make_params("0.19")
    assert (p.beta, p.alpha, p.gamma) == (Q("0.81"), Q("0.9"), Q("0.05"))


def test_params_irrational_root_is_tight_upper_bound():
    p = make_params("1/2")
    assert p.beta == mpq(1, 2)
    assert p.alpha * p.alpha >= p.beta
    assert float(p.alpha) - math.sqrt(0.5) < 1e-12
    assert p.gamma == (1 - p.beta / p.alpha) / 2


@pytest.mark.parametrize("eps", [0, 1, -1, "3/2"])
def test_params_domain(eps):
    with pytest.raises(ParameterError):
        make_params(eps)


@given(st.integers(1, 999))
def test_params_invariants(n):
    p = make_params(mpq(n, 1000))
    assert 0 < p.gamma and p.beta < p.alpha < 1
    assert p.alpha ** 2 >= p.beta
    # gamma = (1 - alpha) / 2 up to rounding, below alpha iff alpha > 1/3
    if p.epsilon < mpq(8, 9):
        assert p.gamma < p.alpha
    assert float(p.alpha) - math.sqrt(float(p.beta)) < 1e-12


@given(st.fractions(min_value=0, max_value=10))
def test_sqrt_upper(x):
    r = sqrt_upper(mpq(x.numerator, x.denominator))
    assert r * r >= mpq(x.numerator, x.denominator)
    assert r - math.sqrt(float(x)) < 1e-11


# --- state bookkeeping


def test_set_fraction_keeps_loads_and_members():
    st_ = FractionalState(2)
    it = item(0, {0: "1/2", 1: "1/4"}, d=2)
    st_.items[0] = it
    st_.set_fraction(0, mpq(1))
    assert st_.load == {0: mpq(1, 2), 1: mpq(1, 4)}
    assert st_.members[0] == {0}
    st_.set_fraction(0, mpq(0))
    assert st_.load == {0: 0, 1: 0}
    assert st_.members[0] == set()
    assert st_.committed() == frozenset()
