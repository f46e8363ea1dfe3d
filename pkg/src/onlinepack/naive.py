"""Fixed-step reference simulator for the arrival phase.

Deliberately naive: theta advances on a uniform grid of step ``h``, the
saturated dimensions and their argmin items are re-derived from the raw
fractions at every grid point, and fractions are advanced with a plain
Euler step in floating point, followed by a projection that pulls any
dimension pushed past capacity back to it by shrinking its argmin.  Only
the shrink rates are cached, keyed by the (saturated dims, argmins)
pattern, since they are a function of it.

It shares no code with the event-driven engine beyond the instance and
objective types, and serves as a cross-check of its decisions and of the
final theta (which it can only overshoot, by less than one step).
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numba
import numpy as np

from .core import Item, make_params
from .objective import Objective

STEP = 2.0 ** -20
LOAD_TOL = 1e-9
RATE_TOL = 1e-12


# The kernels work on arrays compacted to the arriving item's dims (columns)
# and the resident items touching them (rows, ascending id).


@numba.njit(cache=True)
def _loads(x, W, wu, theta, out):
    for a in range(W.shape[1]):
        load = theta * wu[a]
        for v in range(x.shape[0]):
            load += x[v] * W[v, a]
        out[a] = load


@numba.njit(cache=True)
def _argmin(x, W, dens, a):
    """Least dense resident row on column ``a`` (ties by id), -2 if none."""
    best = -2
    bd = np.inf
    for v in range(x.shape[0]):
        if x[v] > 0.0 and W[v, a] > 0.0 and (best == -2 or dens[v, a] < bd):
            best = v
            bd = dens[v, a]
    return best


@numba.njit(cache=True)
def _pattern(x, W, dens, loads, beta, out):
    """Fill ``out`` per column: -1 unsaturated, -2 saturated with no
    candidate, else the argmin row.  Re-derived from the raw fractions."""
    for a in range(W.shape[1]):
        out[a] = _argmin(x, W, dens, a) if loads[a] >= beta - LOAD_TOL else -1
    return out


@numba.njit(cache=True)
def _repair(x, W, dens, wu, theta, beta, loads):
    """Project back under capacity: on every column pushed past beta by the
    last step, shrink its argmin by exactly the overshoot."""
    for _ in range(4 * x.shape[0] + 4):
        clean = True
        for a in range(W.shape[1]):
            over = loads[a] - beta
            if over > 0.0:
                v = _argmin(x, W, dens, a)
                if v < 0:
                    continue
                clean = False
                nv = x[v] - over / W[v, a]
                x[v] = nv if nv > RATE_TOL else 0.0
                _loads(x, W, wu, theta, loads)
        if clean:
            return


@numba.njit(cache=True)
def _advance(j, total, x, W, dens, wu, rates, beta, pat, h):
    """Step while the saturation pattern stays ``pat``; return the grid index."""
    n = x.shape[0]
    m = W.shape[1]
    loads = np.empty(W.shape[1])
    while j < total:
        for v in range(n):
            if rates[v] > 0.0:
                nv = x[v] - rates[v] * h
                x[v] = nv if nv > RATE_TOL else 0.0
        j += 1
        _loads(x, W, wu, j * h, loads)
        over = False
        for a in range(m):
            if loads[a] > beta:
                over = True
        if over:
            _repair(x, W, dens, wu, j * h, beta, loads)
        for a in range(m):
            # re-derive saturation and argmin only where the answer can differ
            sat = loads[a] >= beta - LOAD_TOL
            if sat != (pat[a] != -1):
                return j
            if sat and _argmin(x, W, dens, a) != pat[a]:
                return j
    return j


def _float_rates(tight, argmin, wu, W):
    """Shrink rates for a saturation pattern, in floating point.

    The plain rule first; when it leaves some shrinking item without a
    dimension it holds exactly at capacity, search driving-dimension
    assignments (largest shrinking group first) for a consistent solution.
    """
    def slack(rates):
        return {i: sum(r * W[v, i] for v, r in rates.items()) - wu[i] for i in tight}

    full = {}
    for i in tight:
        v = argmin[i]
        full[v] = max(full.get(v, 0.0), wu[i] / W[v, i])
    sl = slack(full)
    if all(any(argmin[i] == v and abs(sl[i]) <= LOAD_TOL for i in tight) for v in full):
        return full, {i for i in tight if abs(sl[i]) <= LOAD_TOL}
    movers = sorted(full)
    own = {v: sorted(i for i in tight if argmin[i] == v) for v in movers}
    for size in range(len(movers), 0, -1):
        for group in itertools.combinations(movers, size):
            for drivers in itertools.product(*(own[v] for v in group)):
                A = np.array([[W[v, i] for v in group] for i in drivers])
                b = np.array([wu[i] for i in drivers])
                try:
                    sol = np.linalg.solve(A, b)
                except np.linalg.LinAlgError:
                    continue
                if np.any(sol <= RATE_TOL):
                    continue
                rates = dict(zip(group, sol.tolist()))
                sl = slack(rates)
                if all(c >= -LOAD_TOL for c in sl.values()):
                    return rates, {i for i in tight if abs(sl[i]) <= LOAD_TOL}
    raise RuntimeError("naive simulator found no consistent rates")


@dataclass
class NaiveStep:
    item: int
    accepted: bool
    theta_final: float


@dataclass
class NaiveSimulator:
    """Float, fixed-step counterpart of :class:`onlinepack.engine.OnlinePacker`."""

    epsilon: object
    objective: Objective
    dim_count: int
    n_max: int
    h: float = STEP
    steps: list = field(default_factory=list)

    def __post_init__(self):
        p = make_params(self.epsilon)
        self.alpha, self.beta, self.gamma = float(p.alpha), float(p.beta), float(p.gamma)
        self.W = np.zeros((self.n_max, self.dim_count))
        self.dens = np.full((self.n_max, self.dim_count), np.inf)
        self.x = np.zeros(self.n_max)
        self.ever = set()

    def load_state(self, state) -> None:
        """Adopt an engine state (fractions, weights, frozen values) as floats."""
        self.x[:] = 0.0
        self.W[:] = 0.0
        self.dens[:] = np.inf
        for v, it in state.items.items():
            val = state.value_of[v]
            for i, w in it.weights.items():
                self.W[v, i] = float(w)
                self.dens[v, i] = float(val / w)
        for v, f in state.s.items():
            self.x[v] = float(f)
        self.ever = set(state.ever_accepted())

    def committed(self) -> frozenset:
        return frozenset(int(v) for v in np.flatnonzero(self.x > 0))

    def observe(self, item: Item) -> NaiveStep:
        u = item.id
        value = self.objective.marginal(self.ever, u)
        wu = np.zeros(self.dim_count)
        for i, w in item.weights.items():
            wu[i] = float(w)
        dims = np.array(item.weights.dims, dtype=np.int64)
        rows = np.flatnonzero((self.W[:, dims] > 0).any(axis=1) & (self.x > 0))
        W = np.ascontiguousarray(self.W[np.ix_(rows, dims)])
        dens = np.ascontiguousarray(self.dens[np.ix_(rows, dims)])
        wc = wu[dims]
        xc = self.x[rows].copy()
        total = int(round(1 / self.h))
        target = self.gamma * float(value)
        rates = np.zeros(len(rows))
        loads = np.empty(len(dims))
        j = 0
        while j < total:
            _loads(xc, W, wc, j * self.h, loads)
            pat = _pattern(xc, W, dens, loads, self.beta, np.empty(len(dims), dtype=np.int64))
            tight = [a for a in range(len(dims)) if pat[a] != -1]
            if any(pat[a] == -2 for a in tight):
                break  # saturated with nothing to shrink: infinite loss
            argmin = {a: int(pat[a]) for a in tight}
            r, binding = _float_rates(tight, argmin, wc, W) if tight else ({}, set())
            loss = sum(wc[a] * dens[argmin[a], a] for a in binding)
            if not target > loss:
                break
            rates[:] = 0.0
            for v, rv in r.items():
                rates[v] = rv
            j = _advance(j, total, xc, W, dens, wc, rates, self.beta, pat, self.h)
        theta = j * self.h
        accepted = theta >= self.alpha
        if accepted:
            x = self.x.copy()
            x[rows] = xc
            self.ever.add(u)
            x[u] = theta
            self.W[u] = wu
            with np.errstate(divide="ignore"):
                self.dens[u] = np.where(wu > 0, float(value) / np.where(wu > 0, wu, 1.0), np.inf)
            x[x < self.beta] = 0.0
            self.x = x
        step = NaiveStep(u, accepted, theta)
        self.steps.append(step)
        return step


def compare_phases(items, objective: Objective, dim_count: int, epsilon, h: float = STEP) -> list:
    """Run the engine, and before every arrival start a naive phase from the
    engine's exact state.  Returns ``(engine_outcome, naive_step)`` pairs.

    Synchronising per phase keeps the comparison about the continuous
    dynamics: a free-running fixed-step run stops up to one step late and
    carries that extra shrinkage into later phases.
    """
    from .engine import OnlinePacker

    items = list(items)
    packer = OnlinePacker(epsilon, objective, dim_count)
    sim = NaiveSimulator(epsilon, objective, dim_count, max(1, len(items)), h)
    pairs = []
    for it in items:
        sim.load_state(packer.state)
        step = sim.observe(it)
        pairs.append((packer.observe(it), step))
    return pairs


def simulate(items, objective: Objective, dim_count: int, epsilon, h: float = STEP) -> list:
    """Run the naive simulator over an arrival sequence; one NaiveStep per item."""
    items = list(items)
    sim = NaiveSimulator(epsilon, objective, dim_count, max(1, len(items)), h)
    for it in items:
        sim.observe(it)
    return sim.steps
