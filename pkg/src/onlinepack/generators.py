"""Hard-instance families, adaptive adversaries and random instances.

Every sampler returns an :class:`InstanceSample` carrying an explicit
optimal (or lower-bound) witness that is checked for feasibility and value
when the sample is built.  Randomness comes from ``numpy.random.default_rng``
seeded explicitly, so samples are reproducible across platforms.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from gmpy2 import mpq

from .core import Item, Q, SparseWeightVector, is_feasible, sqrt_upper
from .objective import Cardinality, Modular, Objective, unit_coverage
from .offline import MAX_ITEMS, brute_force_opt, verify_claimed_opt


@dataclass
class InstanceSample:
    items: list
    objective: Objective
    dim_count: int
    opt_witness: frozenset | None
    opt_value: mpq | None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.opt_witness is not None and not verify_claimed_opt(
            self.items, self.objective, self.opt_witness, self.opt_value
        ):
            raise AssertionError(f"witness of {self.meta.get('generator')} failed verification")

    @property
    def slack(self) -> mpq:
        """1 - largest coordinate over all items."""
        return 1 - max((it.weights.max_weight() for it in self.items), default=mpq(0))


def _rng(seed):
    return np.random.default_rng(int(seed))


def _check_eps_half(epsilon):
    eps = Q(epsilon)
    if not 0 < eps < mpq(1, 2):
        raise ValueError(f"epsilon must lie in (0, 1/2), got {eps}")
    return eps


# ---------------------------------------------------------------- adversaries


class AdaptiveAdversary:
    """Emits items one at a time after looking at the algorithm's kept set."""

    objective: Objective
    dim_count: int

    def __init__(self):
        self.emitted: list[Item] = []

    def next_item(self, committed) -> Item | None:
        raise NotImplementedError

    def witness(self) -> tuple[frozenset, mpq]:
        raise NotImplementedError


class BigItemAdversary(AdaptiveAdversary):
    """One big item on every dimension, then small items one dimension at a time.

    The big item has value 1 and weight 1 - eps everywhere; small items have
    value ~sqrt(eps/k) and weight 2 eps on a single dimension, floor(1/(2 eps))
    per dimension.  The sequence ends as soon as the big item is not kept.
    """

    def __init__(self, k: int, epsilon):
        super().__init__()
        if k < 1:
            raise ValueError("k must be positive")
        self.k = self.dim_count = k
        self.epsilon = _check_eps_half(epsilon)
        self.per_dim = int(math.floor(1 / (2 * self.epsilon)))
        self.small_value = sqrt_upper(self.epsilon / k)
        values = {0: mpq(1)}
        values.update({j: self.small_value for j in range(1, 1 + k * self.per_dim)})
        self.objective = Modular(values)

    def next_item(self, committed):
        n = len(self.emitted)
        if n == 0:
            item = Item(0, SparseWeightVector.uniform(range(self.k), 1 - self.epsilon, self.k))
        elif 0 not in committed or n == 1 + self.k * self.per_dim:
            return None
        else:
            dim = (n - 1) // self.per_dim
            item = Item(n, SparseWeightVector.uniform([dim], 2 * self.epsilon, self.k))
        self.emitted.append(item)
        return item

    def witness(self):
        # the big item conflicts with every small one; small ones all fit together
        smalls = frozenset(it.id for it in self.emitted[1:])
        small_total = self.small_value * len(smalls)
        if small_total > 1:
            return smalls, small_total
        return frozenset({0}), mpq(1)

    @property
    def gap(self) -> float:
        """sqrt(k / (4 eps)): the ratio the construction forces."""
        return math.sqrt(self.k / (4 * float(self.epsilon)))


class DisjointSubsetAdversary(AdaptiveAdversary):
    """k-subsets of 2k^2 dimensions, each sharing one dimension with the kept item.

    Each new item takes k - 1 never-used dimensions plus one dimension of the
    item currently kept that no other arrived item uses yet.  When nothing is
    kept the most recently kept item stands in; if nothing was ever kept after
    the first arrival, the sequence stops.
    """

    def __init__(self, k: int, epsilon):
        super().__init__()
        if k < 2:
            raise ValueError("k must be at least 2")
        self.k = k
        self.epsilon = _check_eps_half(epsilon)
        self.dim_count = 2 * k * k
        self.objective = Cardinality()
        self.dims: dict[int, frozenset] = {}
        self.owners: dict[int, list] = {}
        self.fresh = 0
        self.last_kept: int | None = None
        self.blocked_on: int | None = None

    def _emit(self, dims):
        vid = len(self.emitted)
        dims = frozenset(dims)
        item = Item(vid, SparseWeightVector.uniform(dims, 1 - self.epsilon, self.dim_count))
        self.emitted.append(item)
        self.dims[vid] = dims
        for i in dims:
            self.owners.setdefault(i, []).append(vid)
        return item

    def _fresh(self, count):
        if self.fresh + count > self.dim_count:
            raise AssertionError("fresh dimensions exhausted")
        out = range(self.fresh, self.fresh + count)
        self.fresh += count
        return out

    def next_item(self, committed):
        n = len(self.emitted)
        if n == 0:
            return self._emit(self._fresh(self.k))
        kept = [v for v in committed if v in self.dims]
        if kept:
            self.last_kept = max(kept)
        if self.last_kept is None or n >= 2 * self.k or self.blocked_on is not None:
            return None
        hat = self.last_kept
        free = sorted(i for i in self.dims[hat] if self.owners[i] == [hat])
        if not free:
            self.blocked_on = hat
            return None
        return self._emit([free[0], *self._fresh(self.k - 1)])

    def witness(self):
        n = len(self.emitted)
        if self.last_kept is None or n == 1:
            chosen = {0}
        elif self.blocked_on is not None:
            hat = self.blocked_on
            chosen = {next(o for o in self.owners[i] if o != hat) for i in self.dims[hat]}
        else:
            alive = list(range(n))
            for v in reversed(range(n)):
                if v not in alive:
                    continue
                alive = [w for w in alive if w >= v or not (self.dims[w] & self.dims[v])]
            chosen = set(alive)
        chosen = frozenset(chosen)
        if not is_feasible([self.emitted[v] for v in chosen], self.dim_count):
            raise AssertionError("adversary witness is infeasible")
        return chosen, mpq(len(chosen))


def adversary_slack_deterministic(k, epsilon) -> BigItemAdversary:
    return BigItemAdversary(k, epsilon)


def adversary_slack_subsets(k, epsilon) -> DisjointSubsetAdversary:
    return DisjointSubsetAdversary(k, epsilon)


# ------------------------------------------------------- random distributions


def slack_dimensions(ell: int) -> tuple[int, int]:
    """(k, d) for the randomized slack construction with ell phases."""
    if ell < 2 or ell & (ell - 1):
        raise ValueError(f"ell must be a power of two >= 2, got {ell}")
    lg = ell.bit_length() - 1
    return 100 * ell * lg + 1, ell + 400 * ell * ell * lg


def sample_slack_distribution(ell: int, epsilon, seed, shuffle: bool = False) -> InstanceSample:
    """ell phases of items on one private dimension plus a (k-1)-block of J.

    Phase i partitions the still-open pool J_i into 4 ell - i + 1 random
    blocks; one block is the good one and leaves the pool, the others stay
    and get re-partitioned in later phases.
    """
    eps = _check_eps_half(epsilon)
    k, d = slack_dimensions(ell)
    rng = _rng(seed)
    w = 1 - eps
    pool = np.arange(ell, d)
    items, good, phases = [], [], []
    for i in range(1, ell + 1):
        count = 4 * ell - i + 1
        assert len(pool) == count * (k - 1)
        blocks = rng.permutation(pool).reshape(count, k - 1)
        order = rng.permutation(count) if shuffle else np.arange(count)
        pick = int(rng.integers(count))
        start = len(items)
        for b in order:
            dims = [i - 1, *blocks[b].tolist()]
            vid = len(items)
            items.append(Item(vid, SparseWeightVector.uniform(dims, w, d)))
            if b == pick:
                good.append(vid)
        phases.append((start, len(items)))
        pool = np.setdiff1d(pool, blocks[pick], assume_unique=True)
    meta = {
        "generator": "slack-random", "ell": ell, "epsilon": str(eps), "seed": int(seed),
        "k": k, "d": d, "phases": phases, "shuffle": shuffle,
    }
    ids = frozenset(it.id for it in items)
    return InstanceSample(items, Cardinality(ids), d, frozenset(good), mpq(ell), meta)


def noslack_weights(d: int, sigma, t: int, j: int) -> dict:
    """Weight map of item (t, j) (both 1-based) for permutation ``sigma`` (0-based dims)."""
    delta = mpq(1, 2 ** (2 * d))
    zero = set(sigma[: t - 1])
    big = sigma[t + j - 2]
    out = {}
    for i in range(d):
        if i in zero:
            continue
        out[i] = 1 - (2**t - 1) * delta if i == big else 2**t * delta
    return out


def sample_noslack_distribution(d: int, seed) -> InstanceSample:
    """d phases; phase t offers d + 1 - t mutually exclusive items.

    Arrival within a phase follows the lexicographic order of the weight
    vectors, so the position reveals nothing about the hidden permutation.
    """
    if not 2 <= d <= 16:
        raise ValueError(f"d must lie in [2, 16], got {d}")
    rng = _rng(seed)
    sigma = [int(s) for s in rng.permutation(d)]
    items, labels, phases, witness = [], {}, [], []
    for t in range(1, d + 1):
        options = []
        for j in range(1, d + 2 - t):
            wmap = noslack_weights(d, sigma, t, j)
            vec = tuple(wmap.get(i, mpq(0)) for i in range(d))
            options.append((vec, j, wmap))
        options.sort(key=lambda o: o[0])
        start = len(items)
        for _, j, wmap in options:
            vid = len(items)
            items.append(Item(vid, SparseWeightVector.from_mapping(wmap, d)))
            labels[vid] = (t, j)
            if j == 1:
                witness.append(vid)
        phases.append((start, len(items)))
    meta = {
        "generator": "noslack", "d": d, "seed": int(seed), "sigma": sigma,
        "labels": labels, "phases": phases,
    }
    ids = frozenset(it.id for it in items)
    return InstanceSample(items, Cardinality(ids), d, frozenset(witness), mpq(d), meta)


def noslack_successor(sample: InstanceSample) -> dict:
    """Map item (t, j), j >= 2, t < d, to its stand-in (t + 1, j - 1) of the next phase."""
    by_label = {lab: vid for vid, lab in sample.meta["labels"].items()}
    d = sample.meta["d"]
    return {
        vid: by_label[(t + 1, j - 1)]
        for vid, (t, j) in sample.meta["labels"].items()
        if j >= 2 and t < d
    }


def noslack_transform(weights: dict, d: int, sigma, t: int) -> dict:
    """Phase-t weight map -> phase-(t+1) map: zero sigma_t, shrink the big
    coordinate to 1 - (2^(t+1) - 1) delta, double the small ones."""
    delta = mpq(1, 2 ** (2 * d))
    out = {}
    for i, w in weights.items():
        if i == sigma[t - 1]:
            continue
        if w == 2**t * delta:
            out[i] = 2 ** (t + 1) * delta
        elif w == 1 - (2**t - 1) * delta:
            out[i] = 1 - (2 ** (t + 1) - 1) * delta
        else:
            raise ValueError(f"coordinate {w} is not of phase {t}")
    return out


def smallweight_sizes(ell: int) -> tuple[int, list]:
    """(d, [b_1, ..., b_{ell+1}]) for the small-weight construction."""
    f = math.factorial
    return f(2 * ell) // f(ell) + ell, [f(2 * ell - i + 1) // f(ell) for i in range(1, ell + 2)]


def sample_smallweight_distribution(ell: int, epsilon_w, seed) -> InstanceSample:
    """ell phases of item types with tiny weights; only one type per phase survives.

    Phase i splits J_i (sorted) into 2 ell - i + 1 consecutive blocks; the
    type of block j uses J_i minus that block, plus private dimension i.
    Each type arrives as 1/eps_w consecutive copies.
    """
    if not 2 <= ell <= 5:
        raise ValueError(f"ell must lie in [2, 5], got {ell}")
    eps = Q(epsilon_w)
    copies = 1 / eps
    if not 0 < eps <= 1 or copies.denominator != 1:
        raise ValueError(f"1/epsilon_w must be a positive integer, got {eps}")
    copies = int(copies)
    d, b = smallweight_sizes(ell)
    rng = _rng(seed)
    pool = list(range(ell, d))
    items, witness, phases, sigma, types = [], [], [], [], {}
    for i in range(1, ell + 1):
        count = 2 * ell - i + 1
        size = b[i]
        assert len(pool) == b[i - 1] == count * size
        blocks = [pool[j * size:(j + 1) * size] for j in range(count)]
        pick = int(rng.integers(count))
        sigma.append(pick + 1)
        start = len(items)
        for j, block in enumerate(blocks):
            dims = [i - 1, *sorted(set(pool) - set(block))]
            vec = SparseWeightVector.uniform(dims, eps, d)
            for _ in range(copies):
                vid = len(items)
                items.append(Item(vid, vec))
                types[vid] = (i, j + 1)
                if j == pick:
                    witness.append(vid)
        phases.append((start, len(items)))
        pool = blocks[pick]
    meta = {
        "generator": "smallweight", "ell": ell, "epsilon_w": str(eps), "seed": int(seed),
        "d": d, "sigma": sigma, "types": types, "phases": phases,
    }
    ids = frozenset(it.id for it in items)
    return InstanceSample(items, Cardinality(ids), d, frozenset(witness), mpq(ell) * copies, meta)


VALUE_MODES = ("unit", "uniform", "coverage")


def gen_random(n: int, d: int, k: int, epsilon, value_mode: str = "uniform", seed=0,
               solve_opt: bool = True) -> InstanceSample:
    """n items on k distinct random dimensions with dyadic weights in (0, 1 - eps]."""
    if not 1 <= k <= d:
        raise ValueError(f"need 1 <= k <= d, got k={k}, d={d}")
    if value_mode not in VALUE_MODES:
        raise ValueError(f"value_mode must be one of {VALUE_MODES}")
    eps = Q(epsilon)
    rng = _rng(seed)
    scale = 1 << 16
    cap = int(math.floor((1 - eps) * scale))
    if cap < 1:
        raise ValueError("epsilon leaves no room for positive weights")
    items = []
    for vid in range(n):
        dims = rng.choice(d, size=k, replace=False)
        nums = rng.integers(1, cap + 1, size=k)
        wmap = {int(i): mpq(int(w), scale) for i, w in zip(dims, nums)}
        items.append(Item(vid, SparseWeightVector.from_mapping(wmap, d)))
    ids = frozenset(range(n))
    if value_mode == "unit":
        objective = Cardinality(ids)
    elif value_mode == "uniform":
        vals = rng.integers(1, scale + 1, size=n)
        objective = Modular({vid: mpq(int(v), scale) for vid, v in enumerate(vals)})
    else:
        universe = max(2, n)
        covers = {}
        for vid in range(n):
            size = int(rng.integers(1, 4))
            covers[vid] = {int(e) for e in rng.choice(universe, size=min(size, universe), replace=False)}
        objective = unit_coverage(covers)
    meta = {"generator": "random", "n": n, "d": d, "k": k, "epsilon": str(eps),
            "value_mode": value_mode, "seed": int(seed)}
    witness = value = None
    if solve_opt and n <= MAX_ITEMS:
        res = brute_force_opt(items, objective)
        witness, value = res.best_set, res.best_value
        meta["opt_source"] = "brute-force"
    return InstanceSample(items, objective, d, witness, value, meta)
