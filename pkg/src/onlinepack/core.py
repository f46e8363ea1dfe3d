"""Shared domain types: exact scalars, sparse weight vectors, items, parameters.

All arithmetic is exact.  Scalars are ``gmpy2.mpq`` rationals; the only
non-rational quantity is an infinite density, represented by ``math.inf``
(which compares above every rational).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

from gmpy2 import isqrt, is_square, mpq

Scalar = mpq
INF = math.inf

# 2**-48 < 1e-12: the dyadic upper approximation of a square root is this close.
SQRT_BITS = 48


class ParameterError(ValueError):
    """A numeric parameter lies outside its admissible domain."""


def Q(value) -> mpq:
    """Coerce ints, Fractions, decimal strings like ``"0.19"`` or ``"3/4"`` to mpq."""
    if isinstance(value, type(mpq(0))):
        return value
    if isinstance(value, str):
        return mpq(Fraction(value.strip()))
    if isinstance(value, float):
        return mpq(Fraction(value))
    if isinstance(value, (tuple, list)) and len(value) == 2:
        return mpq(int(value[0]), int(value[1]))
    return mpq(value)


def sqrt_upper(x) -> mpq:
    """Rational r with r >= sqrt(x) and r - sqrt(x) < 1e-12.

    Exact whenever x is the square of a rational.
    """
    x = Q(x)
    if x < 0:
        raise ParameterError(f"negative radicand {x}")
    num, den = x.numerator, x.denominator
    if is_square(num) and is_square(den):
        return mpq(isqrt(num), isqrt(den))
    scale = 1 << SQRT_BITS
    root = isqrt(num * scale * scale // den)
    r = mpq(root + 1, scale)
    while r * r < x:  # guard; integer floor makes this unreachable in practice
        r += mpq(1, scale)
    return r


@dataclass(frozen=True)
class SparseWeightVector:
    """A weight vector in [0,1]^d kept as sorted (dimension, weight) pairs."""

    dims: tuple
    weights: tuple
    dim_count: int

    def __post_init__(self):
        if len(self.dims) != len(self.weights):
            raise ValueError("dims and weights differ in length")
        prev = -1
        for i, w in zip(self.dims, self.weights):
            if i <= prev:
                raise ValueError("dimensions must be strictly increasing")
            if not 0 <= i < self.dim_count:
                raise ValueError(f"dimension {i} outside [0, {self.dim_count})")
            if not 0 < w <= 1:
                raise ValueError(f"weight {w} on dimension {i} not in (0, 1]")
            prev = i

    @classmethod
    def from_mapping(cls, coords: Mapping[int, object], dim_count: int) -> "SparseWeightVector":
        pairs = sorted((int(i), Q(w)) for i, w in coords.items() if Q(w) != 0)
        return cls(tuple(i for i, _ in pairs), tuple(w for _, w in pairs), dim_count)

    @classmethod
    def uniform(cls, dims: Iterable[int], weight, dim_count: int) -> "SparseWeightVector":
        w = Q(weight)
        ds = tuple(sorted(set(int(i) for i in dims)))
        return cls(ds, (w,) * len(ds), dim_count)

    def sparsity(self) -> int:
        return len(self.dims)

    def items(self):
        return zip(self.dims, self.weights)

    def as_dict(self) -> dict:
        return dict(zip(self.dims, self.weights))

    def get(self, dim: int) -> mpq:
        d = self.as_dict()
        return d.get(dim, mpq(0))

    def max_weight(self) -> mpq:
        return max(self.weights, default=mpq(0))

    def scaled(self, factor) -> "SparseWeightVector":
        f = Q(factor)
        return SparseWeightVector(self.dims, tuple(w * f for w in self.weights), self.dim_count)


@dataclass(frozen=True)
class Item:
    """One arriving element: arrival index, weights and an objective payload.

    ``payload`` is the modular value (a Scalar), the covered element ids (a
    frozenset) for coverage objectives, or None for cardinality.
    """

    id: int
    weights: SparseWeightVector
    payload: object = None

    @property
    def dim_count(self) -> int:
        return self.weights.dim_count


def density(item: Item, value, dim: int):
    """value / w_item(dim), or +inf when the item has no weight on ``dim``."""
    w = item.weights.get(dim)
    if w == 0:
        return INF
    return Q(value) / w


def is_feasible(items: Iterable[Item], d: int) -> bool:
    """True iff the summed weight vectors stay within 1 on every dimension."""
    load: dict = {}
    for it in items:
        if it.dim_count != d:
            raise ValueError(f"item {it.id} has {it.dim_count} dimensions, expected {d}")
        for i, w in it.weights.items():
            total = load.get(i, mpq(0)) + w
            if total > 1:
                return False
            load[i] = total
    return True


def max_sparsity(items: Iterable[Item]) -> int:
    return max((it.weights.sparsity() for it in items), default=0)


@dataclass(frozen=True)
class AlgorithmParams:
    """Thresholds of the online algorithm.

    ``beta`` is the internal capacity, ``alpha`` the acceptance threshold
    (sqrt(beta), rounded up to a rational when irrational) and ``gamma`` the
    gain-to-loss factor of the continuous phase.
    """

    epsilon: mpq
    alpha: mpq
    beta: mpq
    gamma: mpq

    def competitive_constant(self, k: int) -> mpq:
        """Explicit multiplier C with f(OPT) <= C * f(S) when f(empty) = 0."""
        a, b, g = self.alpha, self.beta, self.gamma
        return 2 / a + 2 * k / (g * b * (1 - a))


def make_params(epsilon) -> AlgorithmParams:
    eps = Q(epsilon)
    if not 0 < eps < 1:
        raise ParameterError(f"epsilon must lie in (0, 1), got {eps}")
    beta = 1 - eps
    alpha = sqrt_upper(beta)
    gamma = (1 - beta / alpha) / 2
    # gamma < alpha as well, but only while eps < 8/9; nothing relies on it
    if not (0 < gamma and beta < alpha < 1 and alpha * alpha >= beta):
        raise ParameterError(f"no exact parameters for epsilon {eps}")
    return AlgorithmParams(eps, alpha, beta, gamma)


@dataclass
class FractionalState:
    """Mutable state of one online run.

    ``s`` and ``a`` only store positive entries.  ``load`` is kept sparsely,
    for dimensions that were ever touched; ``members[i]`` lists the items with
    positive ``s`` and positive weight on dimension i.
    """

    dim_count: int
    f_empty: mpq = field(default_factory=lambda: mpq(0))
    s: dict = field(default_factory=dict)
    a: dict = field(default_factory=dict)
    value_of: dict = field(default_factory=dict)
    items: dict = field(default_factory=dict)
    load: dict = field(default_factory=dict)
    members: dict = field(default_factory=dict)
    seen: set = field(default_factory=set)

    def committed(self) -> frozenset:
        return frozenset(v for v, x in self.s.items() if x > 0)

    def ever_accepted(self) -> frozenset:
        return frozenset(v for v, x in self.a.items() if x > 0)

    def fraction(self, vid: int) -> mpq:
        return self.s.get(vid, mpq(0))

    def set_fraction(self, vid: int, new) -> None:
        """Set s(vid), keeping ``load`` and ``members`` consistent."""
        old = self.s.get(vid, mpq(0))
        if new == old:
            return
        item = self.items[vid]
        delta = new - old
        for i, w in item.weights.items():
            self.load[i] = self.load.get(i, mpq(0)) + delta * w
            if new > 0:
                self.members.setdefault(i, set()).add(vid)
            else:
                self.members.get(i, set()).discard(vid)
        if new > 0:
            self.s[vid] = new
        else:
            self.s.pop(vid, None)

    def snapshot(self) -> tuple:
        """Hashable image of the fractional vectors, for equality checks."""
        return (
            tuple(sorted(self.s.items())),
            tuple(sorted(self.a.items())),
            tuple(sorted((i, x) for i, x in self.load.items())),
        )
