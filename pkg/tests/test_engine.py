import copy

import pytest
from gmpy2 import mpq
from hypothesis import given, settings
from hypothesis import strategies as st

from onlinepack.core import FractionalState, Item, SparseWeightVector, make_params
from onlinepack.engine import (
    EventKind,
    OnlinePacker,
    ProtocolError,
    audit_state,
    decrease_rates,
    observe_item,
    run_phase,
)
from onlinepack.generators import gen_random
from onlinepack.naive import STEP, NaiveSimulator
from onlinepack.objective import Modular


def vec(coords, d):
    return SparseWeightVector.from_mapping({i: mpq(w) for i, w in coords.items()}, d)


def ab_packer(b_value=10):
    spec = Modular({0: 1, 1: b_value})
    p = OnlinePacker("3/4", spec, 1, audit=True)
    a = p.observe(Item(0, vec({0: "1/4"}, 1)))
    b = p.observe(Item(1, vec({0: "1/4"}, 1)))
    return p, a, b


def kinds(outcome):
    return [(e.kind, e.theta) for e in outcome.trace.events]


def test_lone_item_climbs_to_one():
    p, a, _ = ab_packer()
    assert a.accepted and a.theta_final == 1
    assert kinds(a) == [(EventKind.THETA_CAP, 1)]


def test_denser_item_evicts_resident():
    p, a, b = ab_packer()
    assert b.accepted and b.theta_final == 1
    assert b.disposed == {0}
    assert p.committed() == {1}
    assert p.value() == 10
    assert p.state.a == {0: 1, 1: 1}
    ev = kinds(b)
    assert ev[0] == (EventKind.DIM_SATURATED, 0)
    assert (EventKind.ITEM_HIT_ZERO, 1) in ev
    assert ev[-1] == (EventKind.THETA_CAP, 1)


def test_worthless_item_stops_at_zero():
    p, a, b = ab_packer(b_value=mpq(1, 10))
    assert not b.accepted and b.theta_final == 0
    assert b.trace.stop_reason == EventKind.STOP_CONDITION
    assert kinds(b)[-1] == (EventKind.STOP_CONDITION, 0)
    assert p.committed() == {0}
    assert p.state.s == {0: 1}


def test_rejection_leaves_state_untouched():
    spec = Modular({0: 1, 1: mpq(1, 10)})
    params = make_params("3/4")
    state = FractionalState(1)
    observe_item(state, Item(0, vec({0: "1/4"}, 1)), spec, params)
    before = copy.deepcopy(state)
    out = observe_item(state, Item(1, vec({0: "1/4"}, 1)), spec, params)
    assert not out.accepted
    assert state.snapshot() == before.snapshot()
    assert state.value_of == before.value_of


def test_zero_value_item_is_discarded():
    spec = Modular({0: 0})
    out = OnlinePacker("1/2", spec, 1).observe(Item(0, vec({0: "1/4"}, 1)))
    assert not out.accepted and out.theta_final == 0


def two_dim_state(b_value):
    """Dim 0 full with A (density 1), dim 1 half full with B, eps = 1/4."""
    spec = Modular({0: mpq(3, 4), 1: b_value, 2: 10})
    params = make_params("1/4")
    state = FractionalState(2)
    for vid, coords in ((0, {0: "3/4"}), (1, {1: "1/2"})):
        it = Item(vid, vec(coords, 2))
        state.items[vid] = it
        state.value_of[vid] = spec.values[vid]
        state.a[vid] = mpq(1)
        state.set_fraction(vid, mpq(1))
    u = Item(2, vec({0: "1/2", 1: "1/2"}, 2))
    return state, spec, params, u


def naive_theta(state, spec, u):
    sim = NaiveSimulator("1/4", spec, 2, 3)
    sim.load_state(state)
    return sim.observe(u)


def test_saturation_jump_triggers_stop_at_same_theta():
    state, spec, params, u = two_dim_state(mpq(1, 2))
    trace = run_phase(state, u, mpq(10), params)
    # dim 1 fills at rate 1/2 from 1/2 and reaches 3/4 at theta = 1/2;
    # the loss then jumps from 1/2 to 1/2 + 1/2 * 1 > gamma * 10
    assert trace.theta_final == mpq(1, 2)
    assert [e.kind for e in trace.events[-2:]] == [EventKind.DIM_SATURATED, EventKind.STOP_CONDITION]
    assert trace.events[-1].theta == mpq(1, 2)
    assert trace.x_final[0] == mpq(2, 3)
    ref = naive_theta(state, spec, u)
    assert not ref.accepted
    assert abs(ref.theta_final - 0.5) <= STEP


def test_saturation_jump_below_threshold_keeps_going():
    state, spec, params, u = two_dim_state(mpq(1, 10))
    out = observe_item(state, u, spec, params, audit=True)
    assert out.accepted and out.theta_final == 1
    # A ends at 1 - 2/3, B at 1 - 1/2: both below beta, both disposed
    assert out.disposed == {0, 1}
    assert state.committed() == {2}
    assert out.audit.ok
    state2, spec2, _, u2 = two_dim_state(mpq(1, 10))
    ref = naive_theta(state2, spec2, u2)
    assert ref.accepted and ref.theta_final == 1


def test_sliding_rates_avoid_chatter():
    w = {"v": {0: mpq(1, 2), 1: mpq(1, 2)}, "w": {1: mpq(1, 2)}}
    rates, binding = decrease_rates(
        [0, 1], {0: "v", 1: "w"}, {0: mpq(1, 2), 1: mpq(1, 2)}, lambda v, i: w[v].get(i, 0)
    )
    # shrinking v for dim 0 already frees dim 1; w must stay put
    assert rates == {"v": 1}
    assert binding == {0, 1}


def test_plain_rule_when_consistent():
    w = {"v": {0: mpq(1, 4)}, "w": {1: mpq(1, 2)}}
    rates, binding = decrease_rates(
        [0, 1], {0: "v", 1: "w"}, {0: mpq(1, 2), 1: mpq(1, 4)}, lambda v, i: w[v].get(i, 0)
    )
    assert rates == {"v": 2, "w": mpq(1, 2)}
    assert binding == {0, 1}


def test_protocol_errors():
    p = OnlinePacker("1/2", Modular({0: 1, 1: 1}), 2)
    p.observe(Item(0, vec({0: "1/4"}, 2)))
    with pytest.raises(ProtocolError):
        p.observe(Item(0, vec({0: "1/4"}, 2)))
    with pytest.raises(ProtocolError):
        p.observe(Item(1, vec({0: "1/4"}, 3)))


def test_duplicate_of_rejected_item_is_refused():
    p = OnlinePacker("3/4", Modular({0: 1, 1: mpq(1, 10)}), 1)
    p.observe(Item(0, vec({0: "1/4"}, 1)))
    assert not p.observe(Item(1, vec({0: "1/4"}, 1))).accepted
    with pytest.raises(ProtocolError):
        p.observe(Item(1, vec({0: "1/4"}, 1)))


# --- audit


def test_audit_empty_state_passes():
    assert audit_state(FractionalState(3), Modular({}), make_params("1/2")).ok


def test_audit_after_ab_example():
    p, _, b = ab_packer()
    audit = audit_state(p.state, p.objective, p.params)
    assert audit.ok
    v_a = sum(p.state.value_of[v] * p.state.a[v] for v in p.state.a)
    assert v_a == 11 and 2 * 10 == 20


def test_audit_flags_small_surviving_fraction():
    p, _, _ = ab_packer()
    p.state.set_fraction(1, p.params.beta / 2)
    audit = audit_state(p.state, p.objective, p.params)
    assert not audit.checks["fractions"].ok
    assert "s(1)" in audit.checks["fractions"].detail


def test_audit_flags_stale_load():
    p, _, _ = ab_packer()
    p.state.load[0] += mpq(1, 100)
    assert "stale" in audit_state(p.state, p.objective, p.params).failures()["fractional_load"]


def test_audit_flags_broken_accounting():
    p, _, _ = ab_packer()
    p.state.value_of[1] = mpq(11)
    assert "value_accounting" in audit_state(p.state, p.objective, p.params).failures()


# --- properties on random instances


@settings(max_examples=60, deadline=None)
@given(
    st.integers(0, 14),
    st.integers(1, 5),
    st.integers(1, 3),
    st.sampled_from(["3/4", "1/2", "19/100", "1/10"]),
    st.sampled_from(["unit", "uniform", "coverage"]),
    st.integers(0, 2**32 - 1),
)
def test_invariants_on_random_instances(n, d, k, eps, mode, seed):
    k = min(k, d)
    sample = gen_random(n, d, k, eps, mode, seed=seed, solve_opt=False)
    p = OnlinePacker(eps, sample.objective, d, audit=True)
    for it in sample.items:
        before = p.state.snapshot()
        out = p.observe(it)
        assert out.audit.ok, out.audit.failures()
        assert out.accepted == (out.theta_final >= p.params.alpha)
        if not out.accepted:
            assert p.state.snapshot() == before
        assert out.disposed <= set(p.state.items)
