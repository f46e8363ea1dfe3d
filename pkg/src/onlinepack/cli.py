"""Command line entry point: ``python -m onlinepack <command> ...``.

Exit codes: 0 ok, 1 usage error, 2 parse error, 3 invariant violation.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .core import ParameterError, Q
from .harness import (
    ADVERSARIES,
    ALGORITHMS,
    DISTRIBUTIONS,
    duel,
    rescale_instance,
    run_trial,
    sample_distribution,
    sweep,
)
from .instance_io import ParseError, dumps_instance, read_instance, write_instance

EXIT_OK, EXIT_USAGE, EXIT_PARSE, EXIT_INVARIANT = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def parse_params(pairs) -> dict:
    out = {}
    for p in pairs or []:
        for chunk in p.split(","):
            if not chunk:
                continue
            if "=" not in chunk:
                raise UsageError(f"parameter {chunk!r} is not key=value")
            key, val = chunk.split("=", 1)
            out[key.strip()] = val.strip()
    return out


def parse_generator_spec(spec: str):
    """``"noslack:d=6,seed=3"`` -> ("noslack", {"d": "6"}, 3)."""
    name, _, rest = spec.partition(":")
    params = parse_params([rest])
    seed = int(params.pop("seed", 0))
    if name not in DISTRIBUTIONS:
        raise UsageError(f"unknown generator {name!r}; choose from {', '.join(DISTRIBUTIONS)}")
    return name, params, seed


def _epsilon(raw):
    return None if raw in (None, "auto") else Q(raw)


def _load(args):
    if args.gen:
        name, params, seed = parse_generator_spec(args.gen)
        return sample_distribution(name, params, seed)
    if not args.instance:
        raise UsageError("give an instance file or --gen SPEC")
    return read_instance(args.instance)


def _write_json(obj, out):
    text = json.dumps(obj, indent=2, sort_keys=True)
    if out:
        Path(out).write_text(text + "\n")
    return text


def cmd_run(args) -> int:
    sample = _load(args)
    rep = run_trial(sample, _epsilon(args.epsilon), audit=args.audit == "on",
                    algorithm=args.algorithm)
    _write_json(rep.to_dict(), args.out)
    print(rep.summary())
    if not rep.audit_ok:
        for item, fails in rep.violations():
            for name, detail in fails.items():
                print(f"invariant violated after item {item}: {name}: {detail}", file=sys.stderr)
        return EXIT_INVARIANT
    return EXIT_OK


def cmd_sweep(args) -> int:
    params = parse_params(args.param)
    rep = sweep(args.distribution, params, args.trials, args.seed, _epsilon(args.epsilon),
                audit=args.audit == "on", workers=args.workers)
    summary = rep.to_dict()
    if args.out:
        stem = Path(args.out)
        if args.format in ("csv", "both"):
            stem.with_suffix(".csv").write_text(rep.to_csv())
        if args.format in ("json", "both"):
            _write_json(summary, stem.with_suffix(".json"))
    print(f"{rep.distribution} {params} trials={rep.trials} epsilon={rep.epsilon}")
    print(f"mean f(S) = {summary['mean_f_S_float']:.4f} +- {summary['stderr_f_S']:.4f}")
    if summary["opt_value"] is not None:
        print(f"optimum = {summary['opt_value']}, empirical ratio = {summary['empirical_ratio_float']:.4f}")
    if summary["expected_value_bound"] is not None:
        print(f"expected-value bound = {summary['expected_value_bound_float']:.4f}"
              f" (within 3 stderr: {summary['bound_within_3_stderr']})")
    return EXIT_OK if rep.audit_ok else EXIT_INVARIANT


def cmd_duel(args) -> int:
    rep = duel(args.adversary, args.k, args.epsilon, algorithm=args.algorithm,
               audit=args.audit == "on")
    _write_json(rep.to_dict(), args.out)
    print(rep.summary())
    return EXIT_OK if rep.audit_ok else EXIT_INVARIANT


def cmd_gen(args) -> int:
    name, params, seed = parse_generator_spec(args.spec)
    seed = args.seed if args.seed is not None else seed
    sample = sample_distribution(name, params, seed)
    if args.out:
        write_instance(sample, args.out)
    else:
        sys.stdout.write(dumps_instance(sample))
    return EXIT_OK


def cmd_rescale(args) -> int:
    sample = read_instance(args.instance)
    if args.factor is not None:
        factor = Q(args.factor)
    elif args.epsilon is not None:
        factor = 1 / (1 + Q(args.epsilon))
    else:
        raise UsageError("give --factor or --epsilon")
    out = rescale_instance(sample, factor)
    if args.out:
        write_instance(out, args.out)
    else:
        sys.stdout.write(dumps_instance(out))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="onlinepack", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    r = sub.add_parser("run", help="run one instance through an online algorithm")
    r.add_argument("instance", nargs="?")
    r.add_argument("--gen", help="generator spec instead of a file, e.g. noslack:d=6,seed=3")
    r.add_argument("--epsilon", default="auto")
    r.add_argument("--algorithm", choices=sorted(ALGORITHMS), default="engine")
    r.add_argument("--audit", choices=("on", "off"), default="on")
    r.add_argument("--out")
    r.add_argument("--format", choices=("json",), default="json")
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("sweep", help="Monte Carlo sweep over a distribution")
    s.add_argument("distribution", choices=DISTRIBUTIONS)
    s.add_argument("--param", action="append", help="key=value[,key=value]")
    s.add_argument("--trials", type=int, default=100)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--epsilon", default="auto")
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--audit", choices=("on", "off"), default="on")
    s.add_argument("--out", help="output path stem; writes .csv and/or .json")
    s.add_argument("--format", choices=("json", "csv", "both"), default="both")
    s.set_defaults(func=cmd_sweep)

    d = sub.add_parser("duel", help="adaptive adversary against an online algorithm")
    d.add_argument("adversary", choices=ADVERSARIES)
    d.add_argument("--k", type=int, required=True)
    d.add_argument("--epsilon", default="1/4")
    d.add_argument("--algorithm", choices=sorted(ALGORITHMS), default="engine")
    d.add_argument("--audit", choices=("on", "off"), default="on")
    d.add_argument("--out")
    d.add_argument("--format", choices=("json",), default="json")
    d.set_defaults(func=cmd_duel)

    g = sub.add_parser("gen", help="write a sampled instance file")
    g.add_argument("spec")
    g.add_argument("--seed", type=int)
    g.add_argument("--out")
    g.set_defaults(func=cmd_gen)

    rs = sub.add_parser("rescale", help="scale all weights of an instance")
    rs.add_argument("instance")
    rs.add_argument("--factor")
    rs.add_argument("--epsilon", help="use factor 1/(1+epsilon)")
    rs.add_argument("--out")
    rs.set_defaults(func=cmd_rescale)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (UsageError, ParameterError, ValueError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
