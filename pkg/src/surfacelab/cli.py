"""Command-line entry point: ``surfacelab <command> [options]``.

Exit codes: 0 success, 2 configuration error, 3 threshold grid does not
bracket a crossing.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from contextlib import ExitStack

import numpy as np

from . import bounds as bounds_mod
from .harness import (
    CSV_COLUMNS,
    BracketingError,
    ConfigError,
    ExperimentConfig,
    curves_from_estimates,
    find_threshold,
    sweep,
    to_csv_rows,
)

EXIT_OK, EXIT_CONFIG, EXIT_BRACKET = 0, 2, 3


def _load_config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
    if args.seed is not None:
        cfg.seed = args.seed
    return cfg


def _cmd_simulate(args) -> int:
    cfg = _load_config(args)
    with ExitStack() as stack:
        dump = stack.enter_context(open(args.dump_trials, "w")) if args.dump_trials else None
        ests = sweep(cfg, jobs=args.jobs, dump=dump)
    payload = [e.to_json() for e in ests]
    text = json.dumps(payload if len(payload) > 1 else payload[0], indent=2)
    if cfg.output:
        with open(cfg.output, "w") as fh:
            fh.write(text + "\n")
    print(text)
    return EXIT_OK


def _cmd_threshold(args) -> int:
    cfg = _load_config(args)
    if len(cfg.L) < 2 or not cfg.p_grid or len(cfg.p_grid) < 4:
        raise ConfigError("threshold needs at least two L values and a p_grid of >= 4 points")
    with ExitStack() as stack:
        dump = stack.enter_context(open(args.dump_trials, "w")) if args.dump_trials else None
        out = stack.enter_context(open(cfg.output, "w", newline="")) if cfg.output else sys.stdout

        def progress(e):
            logging.info("L=%d p=%.4f failures=%d/%d", e.L, e.p, e.failures, e.trials)

        ests = sweep(cfg, jobs=args.jobs, dump=dump, progress=progress)
        w = csv.writer(out)
        w.writerow(CSV_COLUMNS)
        w.writerows(to_csv_rows(ests))
        out.flush()
    try:
        th = find_threshold(curves_from_estimates(ests))
    except BracketingError as exc:
        print(json.dumps({"error": "grid does not bracket", "pairs": exc.pairs}), file=sys.stderr)
        return EXIT_BRACKET
    print(json.dumps(th.to_json()), file=sys.stderr)
    return EXIT_OK


def _cmd_bounds(args) -> int:
    reports = bounds_mod.all_reports()
    if args.json:
        print(json.dumps([r.to_json() for r in reports], indent=2))
        return EXIT_OK
    print(f"{'bound':32s} {'value':>12s} {'anchor':>12s}  pass")
    for r in reports:
        anchor = "" if r.anchor is None else f"{r.anchor:.4g}"
        print(f"{r.name:32s} {r.value:12.6g} {anchor:>12s}  {r.passed}")
    return EXIT_OK


def _cmd_sap(args) -> int:
    res = bounds_mod.enumerate_saps(args.d, args.max_len)
    mu = bounds_mod.growth_constant(res.counts)
    if args.json:
        out = {"d": args.d, "max_len": args.max_len, "counts": res.counts, "mu_hat": mu}
        if res.by_split is not None:
            out["by_split"] = {f"{h},{v}": c for (h, v), c in res.by_split.items()}
        print(json.dumps(out, indent=2))
    else:
        for length, count in res.counts.items():
            if count:
                print(f"{length:3d} {count}")
        print(f"mu_hat {mu:.4f}")
    return EXIT_OK


def _cmd_local4d(args) -> int:
    from .local4d import relaxation_experiment
    from .noise import trial_rng

    seed = 0 if args.seed is None else args.seed
    res = relaxation_experiment(args.L, args.rate, args.rounds, trial_rng(seed, 0))
    if args.csv:
        with open(args.csv, "w") as fh:
            fh.write(res.to_csv())
    print(
        json.dumps(
            {
                "L": args.L,
                "rate": args.rate,
                "rounds": args.rounds,
                "mean_string_length": res.mean_length(),
                "final_string_length": int(res.string_length[-1]) if len(res.string_length) else 0,
                "failed": res.failed,
                "converged": res.converged,
                "homology": res.homology,
            }
        )
    )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="surfacelab", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def experiment(name, help_):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", help="experiment JSON")
        p.add_argument("--seed", type=int, help="override the master seed")
        p.add_argument("--jobs", type=int, default=1, help="worker processes")
        p.add_argument("--dump-trials", help="write one JSON line per trial here")
        return p

    experiment("simulate", "estimate logical failure rates").set_defaults(func=_cmd_simulate)
    experiment("threshold", "sweep a grid and locate curve crossings").set_defaults(func=_cmd_threshold)

    p = sub.add_parser("bounds", help="print analytic threshold bounds")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_bounds)

    p = sub.add_parser("enumerate-sap", help="count self-avoiding polygons")
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--max-len", type=int, default=12)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_sap)

    p = sub.add_parser("local4d", help="4D local-rule relaxation run")
    p.add_argument("--L", type=int, default=4)
    p.add_argument("--rate", type=float, default=1e-4)
    p.add_argument("--rounds", type=int, default=1000)
    p.add_argument("--seed", type=int)
    p.add_argument("--csv", help="write the string-length series here")
    p.set_defaults(func=_cmd_local4d)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        if args.command in ("enumerate-sap", "local4d"):
            print(f"config error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        raise


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
