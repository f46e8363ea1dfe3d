"""Monotone submodular objectives, queried through marginal values.

Three families ship: modular (additive item values), cardinality and
weighted coverage.  All values are exact rationals and f(empty) = 0.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping

from gmpy2 import mpq

from .core import Q


class Objective:
    """Base class; subclasses provide ``evaluate`` and ``marginal``."""

    kind = "abstract"

    @property
    def f_empty(self) -> mpq:
        return mpq(0)

    def evaluate(self, ids: Iterable[int]) -> mpq:
        raise NotImplementedError

    def marginal(self, base: Iterable[int], u: int) -> mpq:
        base = set(base)
        if u in base:
            raise ValueError(f"item {u} already in base set")
        return self.evaluate(base | {u}) - self.evaluate(base)

    def knows(self, u: int) -> bool:
        return True


@dataclass(frozen=True)
class Cardinality(Objective):
    """f(S) = |S|.  ``ids`` optionally restricts the known ground set."""

    ids: frozenset | None = None
    kind = "cardinality"

    def _check(self, u):
        if self.ids is not None and u not in self.ids:
            raise KeyError(f"unknown item id {u}")

    def knows(self, u):
        return self.ids is None or u in self.ids

    def evaluate(self, ids):
        ids = set(ids)
        for u in ids:
            self._check(u)
        return mpq(len(ids))

    def marginal(self, base, u):
        self._check(u)
        if u in base:
            raise ValueError(f"item {u} already in base set")
        return mpq(1)


@dataclass(frozen=True)
class Modular(Objective):
    """f(S) = sum of nonnegative per-item values."""

    values: Mapping[int, mpq] = field(default_factory=dict)
    kind = "modular"

    def __post_init__(self):
        vals = {int(k): Q(v) for k, v in self.values.items()}
        for k, v in vals.items():
            if v < 0:
                raise ValueError(f"negative value {v} for item {k}")
        object.__setattr__(self, "values", vals)

    def knows(self, u):
        return u in self.values

    def evaluate(self, ids):
        return sum((self.values[u] for u in set(ids)), mpq(0))

    def marginal(self, base, u):
        v = self.values[u]
        if u in base:
            raise ValueError(f"item {u} already in base set")
        return v


@dataclass(frozen=True)
class Coverage(Objective):
    """f(S) = total weight of the union of elements covered by S."""

    covers: Mapping[int, frozenset] = field(default_factory=dict)
    element_weights: Mapping[object, mpq] = field(default_factory=dict)
    kind = "coverage"

    def __post_init__(self):
        cov = {int(k): frozenset(v) for k, v in self.covers.items()}
        ew = {e: Q(w) for e, w in self.element_weights.items()}
        for e, w in ew.items():
            if w < 0:
                raise ValueError(f"negative weight {w} for element {e}")
        for k, elems in cov.items():
            missing = [e for e in elems if e not in ew]
            if missing:
                raise ValueError(f"item {k} covers elements without weight: {missing}")
        object.__setattr__(self, "covers", cov)
        object.__setattr__(self, "element_weights", ew)

    def knows(self, u):
        return u in self.covers

    def _union(self, ids):
        out = set()
        for u in ids:
            out |= self.covers[u]
        return out

    def evaluate(self, ids):
        return sum((self.element_weights[e] for e in self._union(set(ids))), mpq(0))

    def marginal(self, base, u):
        new = self.covers[u]
        if u in base:
            raise ValueError(f"item {u} already in base set")
        covered = self._union(base)
        return sum((self.element_weights[e] for e in new - covered), mpq(0))


def marginal(spec: Objective, base, u: int) -> mpq:
    return spec.marginal(base, u)


def evaluate(spec: Objective, ids) -> mpq:
    return spec.evaluate(ids)


def unit_coverage(covers: Mapping[int, Iterable]) -> Coverage:
    """Coverage objective where every element has weight 1."""
    cov = {k: frozenset(v) for k, v in covers.items()}
    elems = set().union(*cov.values()) if cov else set()
    return Coverage(cov, {e: mpq(1) for e in elems})
