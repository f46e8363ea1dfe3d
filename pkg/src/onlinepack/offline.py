"""Exact offline optimum for small instances."""
from __future__ import annotations

import itertools
from dataclasses import dataclass

from gmpy2 import mpq

from .core import Item, is_feasible
from .objective import Objective

MAX_ITEMS = 30


class CapacityError(ValueError):
    """Instance too large for exhaustive search."""


@dataclass(frozen=True)
class OptResult:
    best_set: frozenset
    best_value: mpq
    explored: int


def brute_force_opt(items: list[Item], spec: Objective, max_items: int = MAX_ITEMS) -> OptResult:
    """Depth-first branch and bound over include/exclude decisions.

    Branches are cut as soon as a dimension overflows, or when adding every
    remaining item that still fits individually cannot beat the incumbent
    (valid by monotonicity).
    """
    if len(items) > max_items:
        raise CapacityError(f"{len(items)} items exceed the exhaustive-search cap of {max_items}")
    if not items:
        return OptResult(frozenset(), spec.evaluate(()), 1)

    # most valuable singletons first: good incumbents early
    order = sorted(items, key=lambda it: (-spec.evaluate((it.id,)), it.id))
    weights = [it.weights.as_dict() for it in order]
    ids = [it.id for it in order]
    n = len(order)

    best_set = frozenset()
    best_value = spec.evaluate(())
    explored = 0
    load: dict = {}
    chosen: list = []

    def fits(j):
        return all(load.get(i, 0) + w <= 1 for i, w in weights[j].items())

    def visit(j):
        nonlocal best_set, best_value, explored
        explored += 1
        if j == n:
            val = spec.evaluate(chosen)
            if val > best_value:
                best_value, best_set = val, frozenset(chosen)
            return
        optimistic = chosen + [ids[t] for t in range(j, n) if fits(t)]
        if spec.evaluate(optimistic) <= best_value:
            return
        if fits(j):
            for i, w in weights[j].items():
                load[i] = load.get(i, 0) + w
            chosen.append(ids[j])
            visit(j + 1)
            chosen.pop()
            for i, w in weights[j].items():
                load[i] -= w
        visit(j + 1)

    visit(0)
    return OptResult(best_set, best_value, explored)


def enumerate_opt(items: list[Item], spec: Objective) -> OptResult:
    """Plain 2^n enumeration; the reference for the branch and bound."""
    if not items:
        return OptResult(frozenset(), spec.evaluate(()), 1)
    d = items[0].dim_count
    best_set, best_value, explored = frozenset(), spec.evaluate(()), 0
    for r in range(1, len(items) + 1):
        for combo in itertools.combinations(items, r):
            explored += 1
            if not is_feasible(combo, d):
                continue
            val = spec.evaluate(it.id for it in combo)
            if val > best_value:
                best_value, best_set = val, frozenset(it.id for it in combo)
    return OptResult(best_set, best_value, explored)


def verify_claimed_opt(items: list[Item], spec: Objective, claimed_set, claimed_value) -> bool:
    """True iff ``claimed_set`` is feasible and its value equals ``claimed_value``."""
    by_id = {it.id: it for it in items}
    claimed = set(claimed_set)
    if not claimed <= set(by_id):
        return False
    chosen = [by_id[i] for i in claimed]
    d = items[0].dim_count if items else 0
    if chosen and not is_feasible(chosen, d):
        return False
    return spec.evaluate(claimed) == claimed_value
