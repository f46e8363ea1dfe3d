"""Experiment runner: single trials, seeded sweeps, adversary duels, rescaling.

Reports are plain dataclasses with a ``to_dict`` that is stable across
releases (``SCHEMA_VERSION``); rationals are serialized as ``"num/den"``.
"""
from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

from gmpy2 import mpq

from .core import Item, Q, is_feasible, make_params, max_sparsity
from .engine import OnlinePacker
from .generators import (
    InstanceSample,
    adversary_slack_deterministic,
    adversary_slack_subsets,
    gen_random,
    sample_noslack_distribution,
    sample_slack_distribution,
    sample_smallweight_distribution,
)
from .instance_io import jsonable, rational_str
from .offline import MAX_ITEMS, brute_force_opt

SCHEMA_VERSION = 1
CSV_COLUMNS = ["seed", "n_items", "k_observed", "f_S", "opt", "ratio", "bound", "bound_ok"]
DISTRIBUTIONS = ("slack-random", "noslack", "smallweight", "random")
ADVERSARIES = ("slack-deterministic", "slack-subsets")


# ------------------------------------------------------------- algorithms


class EngineAlgorithm:
    """The online packer, behind the common observe/committed interface."""

    name = "engine"

    def __init__(self, epsilon, objective, dim_count, audit=True):
        self.packer = OnlinePacker(epsilon, objective, dim_count, audit=audit)

    def observe(self, item):
        out = self.packer.observe(item)
        failures = out.audit.failures() if out.audit is not None else {}
        return ArrivalRecord(item.id, out.accepted, out.theta_final,
                             sorted(out.disposed), failures)

    def committed(self):
        return self.packer.committed()


class GreedyAlgorithm:
    """Accept an item iff it fits next to everything kept; never dispose."""

    name = "greedy"

    def __init__(self, epsilon, objective, dim_count, audit=True):
        self.dim_count = dim_count
        self.kept: list[Item] = []

    def observe(self, item):
        ok = is_feasible([*self.kept, item], self.dim_count)
        if ok:
            self.kept.append(item)
        return ArrivalRecord(item.id, ok, None, [], {})

    def committed(self):
        return frozenset(it.id for it in self.kept)


class RejectAllAlgorithm:
    """Test double that discards every arrival."""

    name = "reject"

    def __init__(self, epsilon, objective, dim_count, audit=True):
        pass

    def observe(self, item):
        return ArrivalRecord(item.id, False, None, [], {})

    def committed(self):
        return frozenset()


ALGORITHMS = {cls.name: cls for cls in (EngineAlgorithm, GreedyAlgorithm, RejectAllAlgorithm)}


# ---------------------------------------------------------------- reports


@dataclass
class ArrivalRecord:
    item: int
    accepted: bool
    theta_final: mpq | None
    disposed: list
    audit_failures: dict


def ratio_of(opt, f_s) -> mpq | float:
    if f_s == 0:
        return mpq(1) if opt == 0 else math.inf
    return Q(opt) / f_s


@dataclass
class TrialReport:
    meta: dict
    epsilon: mpq
    algorithm: str
    arrivals: list
    final_set: list
    f_S: mpq
    opt_value: mpq | None
    opt_source: str
    k_observed: int
    bound: mpq | None
    bound_ok: bool | None

    @property
    def ratio(self):
        if self.opt_value is None:
            return None
        return ratio_of(self.opt_value, self.f_S)

    @property
    def audit_ok(self) -> bool:
        return all(not a.audit_failures for a in self.arrivals)

    def violations(self) -> list:
        return [(a.item, a.audit_failures) for a in self.arrivals if a.audit_failures]

    def to_dict(self) -> dict:
        ratio = self.ratio
        return {
            "schema_version": SCHEMA_VERSION,
            "meta": jsonable(self.meta),
            "epsilon": rational_str(self.epsilon),
            "algorithm": self.algorithm,
            "arrivals": [
                {
                    "item": a.item,
                    "accepted": a.accepted,
                    "theta_final": rational_str(a.theta_final) if a.theta_final is not None else None,
                    "disposed": a.disposed,
                    "audit_failures": a.audit_failures,
                }
                for a in self.arrivals
            ],
            "final_set": sorted(self.final_set),
            "f_S": rational_str(self.f_S),
            "opt_value": rational_str(self.opt_value) if self.opt_value is not None else None,
            "opt_source": self.opt_source,
            "ratio": _ratio_str(ratio),
            "ratio_float": None if ratio is None else float(ratio),
            "k_observed": self.k_observed,
            "bound": rational_str(self.bound) if self.bound is not None else None,
            "bound_ok": self.bound_ok,
            "audit_ok": self.audit_ok,
        }

    def summary(self) -> str:
        ratio = self.ratio
        lines = [
            f"instance   {self.meta.get('generator', 'file')} ({len(self.arrivals)} arrivals)",
            f"algorithm  {self.algorithm}, epsilon = {rational_str(self.epsilon)}",
            f"kept       {len(self.final_set)} items, f(S) = {rational_str(self.f_S)}",
            f"optimum    {rational_str(self.opt_value) if self.opt_value is not None else 'n/a'}"
            f" ({self.opt_source})",
            f"ratio      {_ratio_str(ratio)}" + (f" (~{float(ratio):.4g})" if ratio not in (None, math.inf) else ""),
            f"audit      {'ok' if self.audit_ok else 'VIOLATED'}",
        ]
        if self.bound_ok is not None:
            lines.append(f"explicit competitive bound {'holds' if self.bound_ok else 'VIOLATED'}")
        return "\n".join(lines)


def _ratio_str(r):
    if r is None:
        return None
    if r == math.inf:
        return "inf"
    return rational_str(r)


def default_epsilon(sample: InstanceSample):
    """Largest slack the instance satisfies, when the meta does not fix one."""
    meta = sample.meta
    gen = meta.get("generator")
    if gen in ("slack-random", "random") and "epsilon" in meta:
        return Q(meta["epsilon"])
    if gen == "smallweight":
        return Q(meta["epsilon_w"])
    slack = sample.slack
    if not sample.items:
        return mpq(1, 2)
    if not 0 < slack < 1:
        raise ValueError(f"instance has no usable slack ({slack}); pass epsilon explicitly")
    return slack


def run_trial(sample: InstanceSample, epsilon=None, audit: bool = True,
              algorithm: str = "engine", opt: str = "auto") -> TrialReport:
    """Feed ``sample`` through an online algorithm and compare with the optimum.

    ``opt``: "auto" (brute force when at most 30 items, else the sample's
    witness), "brute-force", "witness" or "none".
    """
    eps = Q(epsilon) if epsilon is not None else default_epsilon(sample)
    alg = ALGORITHMS[algorithm](eps, sample.objective, sample.dim_count, audit=audit)
    arrivals = [alg.observe(it) for it in sample.items]
    final = alg.committed()
    f_s = sample.objective.evaluate(final)

    opt_value, source = None, "none"
    if opt == "brute-force" or (opt == "auto" and len(sample.items) <= MAX_ITEMS):
        opt_value, source = brute_force_opt(sample.items, sample.objective).best_value, "brute-force"
    elif opt in ("auto", "witness") and sample.opt_value is not None:
        opt_value = sample.opt_value
        source = sample.meta.get("opt_source", "witness")

    k = max_sparsity(sample.items)
    params = make_params(eps)
    bound = bound_ok = None
    if sample.slack >= eps:
        bound = params.competitive_constant(k)
        if opt_value is not None:
            bound_ok = opt_value <= bound * f_s
    return TrialReport(dict(sample.meta), eps, algorithm, arrivals, sorted(final), f_s,
                       opt_value, source, k, bound, bound_ok)


# ------------------------------------------------------------------ duels


def make_adversary(name: str, k: int, epsilon):
    if name == "slack-deterministic":
        return adversary_slack_deterministic(k, epsilon)
    if name == "slack-subsets":
        return adversary_slack_subsets(k, epsilon)
    raise ValueError(f"unknown adversary {name!r}; choose from {ADVERSARIES}")


def duel(name: str, k: int, epsilon, algorithm: str = "engine", audit: bool = True,
         engine_epsilon=None) -> TrialReport:
    """Let an adaptive adversary build the sequence against ``algorithm``."""
    adv = make_adversary(name, k, epsilon)
    eps = Q(engine_epsilon) if engine_epsilon is not None else Q(epsilon)
    alg = ALGORITHMS[algorithm](eps, adv.objective, adv.dim_count, audit=audit)
    arrivals = []
    while True:
        item = adv.next_item(alg.committed())
        if item is None:
            break
        arrivals.append(alg.observe(item))
    final = alg.committed()
    f_s = adv.objective.evaluate(final)
    witness, opt_value = adv.witness()
    source = "analytic" if name == "slack-deterministic" else "witness"
    meta = {"generator": name, "k": k, "epsilon": rational_str(Q(epsilon)),
            "length": len(adv.emitted), "witness": sorted(witness)}
    kobs = max_sparsity(adv.emitted)
    params = make_params(eps)
    bound = params.competitive_constant(kobs)
    return TrialReport(meta, eps, algorithm, arrivals, sorted(final), f_s, opt_value, source,
                       kobs, bound, opt_value <= bound * f_s)


# ----------------------------------------------------------------- sweeps


def expected_value_bound(distribution: str, params: dict):
    """Upper bound on E[f(S)] that the hardness analysis gives, or None."""
    if distribution == "noslack":
        d = int(params["d"])
        return 1 + sum((mpq(1, d + 1 - t) for t in range(1, d)), mpq(0))
    if distribution == "smallweight":
        ell = int(params["ell"])
        return (1 / Q(params["epsilon_w"])) * (1 + sum((mpq(1, 2 * ell - i + 1) for i in range(1, ell)), mpq(0)))
    if distribution == "slack-random":
        return mpq(6)
    return None


def sample_distribution(distribution: str, params: dict, seed) -> InstanceSample:
    p = dict(params)
    if distribution == "noslack":
        return sample_noslack_distribution(int(p["d"]), seed)
    if distribution == "smallweight":
        return sample_smallweight_distribution(int(p["ell"]), p.get("epsilon_w", "1/4"), seed)
    if distribution == "slack-random":
        return sample_slack_distribution(int(p["ell"]), p.get("epsilon", "1/4"), seed,
                                         shuffle=bool(p.get("shuffle", False)))
    if distribution == "random":
        n = int(p.get("n", 10))
        return gen_random(n, int(p.get("d", 4)), int(p.get("k", 2)), p.get("epsilon", "1/4"),
                          p.get("value_mode", "uniform"), seed, solve_opt=n <= MAX_ITEMS)
    raise ValueError(f"unknown distribution {distribution!r}; choose from {DISTRIBUTIONS}")


@dataclass
class SweepRow:
    seed: int
    n_items: int
    k_observed: int
    f_S: mpq
    opt: mpq | None
    ratio: object
    bound: mpq | None
    bound_ok: bool | None
    audit_ok: bool

    def csv_fields(self) -> list:
        return [
            self.seed, self.n_items, self.k_observed, rational_str(self.f_S),
            rational_str(self.opt) if self.opt is not None else "",
            _ratio_str(self.ratio) or "", rational_str(self.bound) if self.bound is not None else "",
            "" if self.bound_ok is None else str(self.bound_ok).lower(),
        ]


def _sweep_trial(job):
    distribution, params, seed, epsilon, audit, opt = job
    sample = sample_distribution(distribution, params, seed)
    rep = run_trial(sample, epsilon, audit=audit, opt=opt)
    return SweepRow(seed, len(sample.items), rep.k_observed, rep.f_S, rep.opt_value,
                    rep.ratio, rep.bound, rep.bound_ok, rep.audit_ok), rep.epsilon


@dataclass
class SweepReport:
    distribution: str
    params: dict
    epsilon: object
    trials: int
    seeds: list
    rows: list = field(repr=False, default_factory=list)

    @property
    def mean_f(self) -> mpq:
        return sum((r.f_S for r in self.rows), mpq(0)) / len(self.rows)

    @property
    def stderr_f(self) -> float:
        n = len(self.rows)
        if n < 2:
            return 0.0
        mean = self.mean_f
        var = sum(((r.f_S - mean) ** 2 for r in self.rows), mpq(0)) / (n - 1)
        return math.sqrt(float(var) / n)

    @property
    def mean_opt(self):
        opts = [r.opt for r in self.rows if r.opt is not None]
        return sum(opts, mpq(0)) / len(opts) if opts else None

    @property
    def empirical_ratio(self):
        if self.mean_opt is None:
            return None
        return ratio_of(self.mean_opt, self.mean_f)

    @property
    def value_bound(self):
        return expected_value_bound(self.distribution, self.params)

    @property
    def audit_ok(self) -> bool:
        return all(r.audit_ok for r in self.rows)

    def to_dict(self) -> dict:
        vb = self.value_bound
        er = self.empirical_ratio
        return {
            "schema_version": SCHEMA_VERSION,
            "distribution": self.distribution,
            "params": jsonable(self.params),
            "epsilon": jsonable(self.epsilon),
            "trials": self.trials,
            "seeds": self.seeds,
            "mean_f_S": rational_str(self.mean_f),
            "mean_f_S_float": float(self.mean_f),
            "stderr_f_S": self.stderr_f,
            "opt_value": rational_str(self.mean_opt) if self.mean_opt is not None else None,
            "opt_values": sorted({rational_str(r.opt) for r in self.rows if r.opt is not None}),
            "empirical_ratio": _ratio_str(er),
            "empirical_ratio_float": None if er is None else float(er),
            "expected_value_bound": rational_str(vb) if vb is not None else None,
            "expected_value_bound_float": None if vb is None else float(vb),
            "bound_within_3_stderr": None if vb is None else float(self.mean_f) <= float(vb) + 3 * self.stderr_f,
            "explicit_bound_violations": sum(1 for r in self.rows if r.bound_ok is False),
            "audit_ok": self.audit_ok,
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in self.rows:
            w.writerow(r.csv_fields())
        return buf.getvalue()


def sweep(distribution: str, params: dict, trials: int, seed0: int = 0, epsilon=None,
          audit: bool = True, workers: int = 1, opt: str = "auto") -> SweepReport:
    """Run ``trials`` independent samples with seeds seed0, seed0 + 1, ..."""
    if distribution not in DISTRIBUTIONS:
        raise ValueError(f"unknown distribution {distribution!r}; choose from {DISTRIBUTIONS}")
    if trials < 1:
        raise ValueError("trials must be at least 1")
    seeds = list(range(seed0, seed0 + trials))
    jobs = [(distribution, dict(params), s, epsilon, audit, opt) for s in seeds]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_trial, jobs, chunksize=max(1, trials // (4 * workers))))
    else:
        results = [_sweep_trial(j) for j in jobs]
    rows = [r for r, _ in results]
    used = sorted({rational_str(e) for _, e in results})
    eps = used[0] if len(used) == 1 else used
    return SweepReport(distribution, dict(params), eps, trials, seeds, rows)


# --------------------------------------------------------------- rescaling


def rescale_instance(sample: InstanceSample, factor) -> InstanceSample:
    """Multiply every weight by ``factor`` in (0, 1]; the witness stays feasible."""
    f = Q(factor)
    if not 0 < f <= 1:
        raise ValueError(f"factor must lie in (0, 1], got {f}")
    items = [Item(it.id, it.weights.scaled(f), it.payload) for it in sample.items]
    meta = dict(sample.meta)
    if f != 1:
        meta["rescaled_by"] = rational_str(f)
        meta["opt_source"] = "witness"
    return InstanceSample(items, sample.objective, sample.dim_count,
                          sample.opt_witness, sample.opt_value, meta)
