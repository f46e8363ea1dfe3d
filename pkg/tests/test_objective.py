import pytest
from gmpy2 import mpq
from hypothesis import given
from hypothesis import strategies as st

from onlinepack.objective import Cardinality, Coverage, Modular, evaluate, marginal, unit_coverage

COVER = unit_coverage({1: {"a", "b"}, 2: {"b", "c"}})


def test_marginal_examples():
    assert marginal(Cardinality(), {1, 2}, 7) == 1
    assert marginal(Modular({7: mpq(5, 2)}), {1, 2}, 7) == mpq(5, 2)
    assert marginal(COVER, {1}, 2) == 1


def test_evaluate_examples():
    assert evaluate(Cardinality(), {3, 5, 9}) == 3
    assert evaluate(Modular({1: 1, 2: 2}), {1, 2}) == 3
    assert evaluate(COVER, {1, 2}) == 3


def test_empty_set_is_zero():
    for spec in (Cardinality(), Modular({1: 1}), COVER):
        assert spec.evaluate(()) == 0 == spec.f_empty


def test_unknown_ids_raise_lookup_errors():
    with pytest.raises(KeyError):
        marginal(Modular({1: 1}), set(), 2)
    with pytest.raises(KeyError):
        evaluate(COVER, {9})
    with pytest.raises(KeyError):
        Cardinality(frozenset({0, 1})).marginal(set(), 5)


def test_marginal_requires_u_outside_base():
    with pytest.raises(ValueError):
        marginal(Modular({1: 1}), {1}, 1)


def test_negative_values_rejected():
    with pytest.raises(ValueError):
        Modular({1: -1})
    with pytest.raises(ValueError):
        Coverage({1: {"a"}}, {"a": -1})


def test_weighted_coverage():
    spec = Coverage({0: {"x", "y"}, 1: {"y"}}, {"x": mpq(1, 3), "y": 2})
    assert spec.evaluate({0}) == mpq(7, 3)
    assert spec.marginal({0}, 1) == 0


covers = st.dictionaries(st.integers(0, 7), st.frozensets(st.integers(0, 9), max_size=4), min_size=1)


@given(covers, st.data())
def test_coverage_monotone_submodular_consistent(cov, data):
    spec = unit_coverage(cov)
    ids = sorted(cov)
    u = data.draw(st.sampled_from(ids))
    rest = [v for v in ids if v != u]
    big = set(data.draw(st.lists(st.sampled_from(rest), unique=True)) if rest else [])
    small = {v for v in big if data.draw(st.booleans())}
    m_small, m_big = spec.marginal(small, u), spec.marginal(big, u)
    assert m_small >= m_big >= 0
    assert spec.evaluate(big | {u}) == spec.evaluate(big) + m_big


@given(st.dictionaries(st.integers(0, 9), st.fractions(min_value=0, max_value=5), min_size=1), st.data())
def test_modular_consistency(vals, data):
    spec = Modular({k: mpq(v.numerator, v.denominator) for k, v in vals.items()})
    ids = sorted(vals)
    u = data.draw(st.sampled_from(ids))
    base = {v for v in ids if v != u and data.draw(st.booleans())}
    assert spec.evaluate(base | {u}) == spec.evaluate(base) + spec.marginal(base, u)
