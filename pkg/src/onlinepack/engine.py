"""Deterministic online packing with free disposal.

Each arrival runs a continuous phase in which the new item's fraction grows
with theta while, on every saturated dimension it touches, the least dense
resident item shrinks to make room.  Densities are constant within a phase,
so every quantity is affine in theta between structural events and the
phase is simulated exactly, event by event, in rational arithmetic.

After the phase the change is committed only if theta reached ``alpha``;
resident items whose fraction dropped below ``beta`` are then disposed of.
"""
from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field

from gmpy2 import mpq

from .core import INF, AlgorithmParams, FractionalState, Item, make_params
from .objective import Objective

MAX_EVENTS = 100_000
# Above this many distinct argmin items the exact rate solve is refused.
MAX_RATE_ITEMS = 14


class ProtocolError(ValueError):
    """The arrival sequence violates the online protocol."""


class EngineInvariantError(AssertionError):
    """An internal invariant broke; always an engine bug."""


class EventKind(enum.Enum):
    DIM_SATURATED = "dim_saturated"
    DIM_UNSATURATED = "dim_unsaturated"
    ITEM_HIT_ZERO = "item_hit_zero"
    ARGMIN_CHANGED = "argmin_changed"
    STOP_CONDITION = "stop_condition"
    THETA_CAP = "theta_cap"


@dataclass(frozen=True)
class Event:
    theta: mpq
    kind: EventKind
    dim: int | None = None
    item: int | None = None
    old: int | None = None


@dataclass
class PhaseTrace:
    theta_final: mpq
    x_final: dict
    events: list
    stop_reason: EventKind
    changed: dict = field(default_factory=dict, repr=False)


@dataclass(frozen=True)
class CheckResult:
    ok: bool
    detail: str = ""


@dataclass
class InvariantAudit:
    checks: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checks.values())

    def failures(self) -> dict:
        return {name: c.detail for name, c in self.checks.items() if not c.ok}


@dataclass
class StepOutcome:
    item: int
    accepted: bool
    theta_final: mpq
    disposed: frozenset
    value_u: mpq
    audit: InvariantAudit | None = None
    trace: PhaseTrace | None = None


def _solve(matrix, rhs):
    """Exact Gaussian elimination; None if singular."""
    n = len(rhs)
    m = [list(row) + [b] for row, b in zip(matrix, rhs)]
    for col in range(n):
        piv = next((r for r in range(col, n) if m[r][col] != 0), None)
        if piv is None:
            return None
        m[col], m[piv] = m[piv], m[col]
        p = m[col][col]
        for r in range(n):
            if r != col and m[r][col] != 0:
                f = m[r][col] / p
                m[r] = [a - f * b for a, b in zip(m[r], m[col])]
    return [m[r][n] / m[r][r] for r in range(n)]


def _slacks(tight, rates, wu, weight):
    return {
        i: sum((r * weight(v, i) for v, r in rates.items()), mpq(0)) - wu[i]
        for i in tight
    }


def decrease_rates(tight, argmin, wu, weight):
    """Shrink rates for the argmin items of the tight dimensions.

    Returns ``(rates, binding)``.  Every tight dimension must end with a
    nonpositive load derivative, and every shrinking item must be driven by
    a dimension where it is the argmin and whose load stays exactly at
    capacity (``binding``).  In the common case this is the plain rule
    rate(v) = max over dims where v is argmin of w_u(i) / w_v(i).  When a
    shrinking item also loads another tight dimension, that rule would make
    the dimension chatter in and out of saturation; the rates returned are
    then the limiting (sliding) ones, found by a small exact complementarity
    search over driving dimensions.
    """
    if not tight:
        return {}, set()
    full = {}
    for i in tight:
        v = argmin[i]
        r = wu[i] / weight(v, i)
        if v not in full or r > full[v]:
            full[v] = r
    slack = _slacks(tight, full, wu, weight)
    if all(any(argmin[i] == v and slack[i] == 0 for i in tight) for v in full):
        return full, {i for i in tight if slack[i] == 0}

    movers = sorted(full)
    if len(movers) > MAX_RATE_ITEMS:
        raise EngineInvariantError(f"rate solve over {len(movers)} items refused")
    own = {v: sorted(i for i in tight if argmin[i] == v) for v in movers}
    for size in range(len(movers), 0, -1):
        for group in itertools.combinations(movers, size):
            for drivers in itertools.product(*(own[v] for v in group)):
                matrix = [[weight(v, i) for v in group] for i in drivers]
                sol = _solve(matrix, [wu[i] for i in drivers])
                if sol is None or any(r <= 0 for r in sol):
                    continue
                rates = dict(zip(group, sol))
                slack = _slacks(tight, rates, wu, weight)
                if all(c >= 0 for c in slack.values()):
                    return rates, {i for i in tight if slack[i] == 0}
    raise EngineInvariantError("no consistent shrink rates for tight dimensions")


def run_phase(state: FractionalState, item: Item, value_u, params: AlgorithmParams) -> PhaseTrace:
    """Simulate the continuous phase for ``item`` without touching ``state``."""
    beta, gamma = params.beta, params.gamma
    u = item.id
    wu = item.weights.as_dict()
    udims = item.weights.dims
    target = gamma * value_u

    wcache = {}

    def weight(v, i):
        d = wcache.get(v)
        if d is None:
            d = wcache[v] = state.items[v].weights.as_dict()
        return d.get(i, 0)

    x = {}

    def frac(v):
        return x[v] if v in x else state.s[v]

    load = {i: state.load.get(i, mpq(0)) for i in udims}
    cands = {i: set(state.members.get(i, ())) for i in udims}
    theta = mpq(0)
    events = []
    saturated = {}
    reason = None

    for _ in range(MAX_EVENTS):
        if theta == 1:
            events.append(Event(theta, EventKind.THETA_CAP))
            reason = EventKind.THETA_CAP
            break
        tight = [i for i in udims if load[i] == beta]
        argmin = {}
        blocked = False
        for i in tight:
            if not cands[i]:
                # only the arriving item fills this dimension: nothing to shrink
                blocked = True
                continue
            argmin[i] = min(cands[i], key=lambda v: (state.value_of[v] / weight(v, i), v))
        if blocked:
            rates, binding, loss = {}, set(tight), INF
        else:
            rates, binding = decrease_rates(tight, argmin, wu, weight)
            loss = sum(
                (wu[i] * state.value_of[argmin[i]] / weight(argmin[i], i) for i in binding),
                mpq(0),
            )

        now = {i: argmin.get(i) for i in binding}
        for i in sorted(saturated):
            if i not in now:
                events.append(Event(theta, EventKind.DIM_UNSATURATED, dim=i))
        for i in sorted(now):
            if i not in saturated:
                events.append(Event(theta, EventKind.DIM_SATURATED, dim=i, item=now[i]))
            elif saturated[i] != now[i]:
                events.append(Event(theta, EventKind.ARGMIN_CHANGED, dim=i, item=now[i], old=saturated[i]))
        saturated = now

        if not target > loss:
            events.append(Event(theta, EventKind.STOP_CONDITION))
            reason = EventKind.STOP_CONDITION
            break

        dload = {
            i: wu[i] - sum((r * weight(v, i) for v, r in rates.items()), mpq(0))
            for i in udims
        }
        step = 1 - theta
        for v, r in rates.items():
            step = min(step, frac(v) / r)
        for i in udims:
            if i not in binding and dload[i] > 0:
                step = min(step, (beta - load[i]) / dload[i])
        if step <= 0:
            raise EngineInvariantError(f"non-positive step {step} at theta={theta}")

        theta += step
        for i in udims:
            load[i] += dload[i] * step
            if load[i] > beta:
                raise EngineInvariantError(f"load {load[i]} > beta on dim {i} at theta={theta}")
        for v in sorted(rates):
            nv = frac(v) - rates[v] * step
            if nv < 0:
                raise EngineInvariantError(f"fraction of {v} negative at theta={theta}")
            x[v] = nv
            if nv == 0:
                for i in wcache[v]:
                    if i in cands:
                        cands[i].discard(v)
                events.append(Event(theta, EventKind.ITEM_HIT_ZERO, item=v))
    else:
        raise EngineInvariantError("phase exceeded the event budget")

    changed = dict(x)
    if theta > 0:
        changed[u] = theta
    x_final = {v: f for v, f in state.s.items() if v not in x}
    x_final.update((v, f) for v, f in changed.items() if f > 0)
    return PhaseTrace(theta, x_final, events, reason, changed)


def observe_item(
    state: FractionalState,
    item: Item,
    spec: Objective,
    params: AlgorithmParams,
    audit: bool = False,
) -> StepOutcome:
    """Process one arrival; mutates ``state`` only when the item is accepted."""
    if item.id in state.items or item.id in state.seen:
        raise ProtocolError(f"duplicate item id {item.id}")
    if item.dim_count != state.dim_count:
        raise ProtocolError(
            f"item {item.id} has {item.dim_count} dimensions, state has {state.dim_count}"
        )
    state.seen.add(item.id)
    value_u = spec.marginal(state.ever_accepted(), item.id)
    trace = run_phase(state, item, value_u, params)
    theta = trace.theta_final
    disposed = frozenset()
    accepted = theta >= params.alpha
    if accepted:
        before = state.committed()
        state.items[item.id] = item
        state.value_of[item.id] = value_u
        for v, f in trace.changed.items():
            state.set_fraction(v, f)
        state.a[item.id] = theta
        for v in [v for v, f in state.s.items() if f < params.beta]:
            state.set_fraction(v, mpq(0))
        disposed = frozenset(before - state.committed())
    report = audit_state(state, spec, params) if audit else None
    return StepOutcome(item.id, accepted, theta, disposed, value_u, report, trace)


def audit_state(state: FractionalState, spec: Objective, params: AlgorithmParams) -> InvariantAudit:
    """Check every between-arrival invariant exactly; never raises."""
    alpha, beta, gamma = params.alpha, params.beta, params.gamma
    checks = {}
    S = state.committed()
    A = state.ever_accepted()

    frac_load, int_load = {}, {}
    for v, f in state.s.items():
        for i, w in state.items[v].weights.items():
            frac_load[i] = frac_load.get(i, mpq(0)) + f * w
            int_load[i] = int_load.get(i, mpq(0)) + w
    bad = [i for i, l in frac_load.items() if l > beta]
    drift = [i for i in set(frac_load) | set(state.load)
             if frac_load.get(i, 0) != state.load.get(i, 0)]
    checks["fractional_load"] = CheckResult(
        not bad and not drift,
        f"dims over beta: {sorted(bad)}; stale loads: {sorted(drift)}" if bad or drift else "",
    )
    bad = [i for i, l in int_load.items() if l > 1]
    checks["integral_load"] = CheckResult(not bad, f"dims over 1: {sorted(bad)}" if bad else "")

    bad = []
    for v, f in state.a.items():
        if not alpha <= f <= 1:
            bad.append(f"a({v})={f}")
    for v, f in state.s.items():
        if not beta <= f <= 1:
            bad.append(f"s({v})={f}")
        if f > state.a.get(v, 0):
            bad.append(f"s({v}) > a({v})")
    checks["fractions"] = CheckResult(not bad, "; ".join(bad))

    vA = sum((state.value_of[v] for v in A), mpq(0))
    vS = sum((state.value_of[v] for v in S), mpq(0))
    fA, fS = spec.evaluate(A), spec.evaluate(S)
    ok = fA == state.f_empty + vA and fS >= state.f_empty + vS
    checks["value_accounting"] = CheckResult(
        ok, "" if ok else f"f(A)={fA} v(A)={vA} f(S)={fS} v(S)={vS}"
    )

    v_s = sum((state.value_of[v] * f for v, f in state.s.items()), mpq(0))
    gone = sum((state.value_of[r] * state.a[r] for r in A - S), mpq(0))
    kept = sum((state.value_of[r] * state.a[r] for r in S), mpq(0))
    rhs = (1 - gamma - beta / alpha) * gone + (1 - gamma) * kept
    checks["value_invariant"] = CheckResult(v_s >= rhs, "" if v_s >= rhs else f"v(s)={v_s} < {rhs}")

    v_a = gone + kept
    ok = v_a <= 2 * vS
    checks["value_doubling"] = CheckResult(ok, "" if ok else f"v(a)={v_a} > 2*v(S)={2 * vS}")
    return InvariantAudit(checks)


class OnlinePacker:
    """Convenience wrapper binding state, objective and parameters."""

    def __init__(self, epsilon, objective: Objective, dim_count: int, audit: bool = False):
        self.params = make_params(epsilon)
        self.objective = objective
        self.state = FractionalState(dim_count, objective.f_empty)
        self.audit = audit
        self.outcomes = []

    def observe(self, item: Item) -> StepOutcome:
        out = observe_item(self.state, item, self.objective, self.params, audit=self.audit)
        self.outcomes.append(out)
        return out

    def committed(self) -> frozenset:
        return self.state.committed()

    def value(self):
        return self.objective.evaluate(self.committed())
