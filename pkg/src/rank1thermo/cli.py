"""Command line front end.

    rank1thermo run <experiment> [--out DIR] [--seed N] [--threads N]
    rank1thermo run --config cfg.json [--out DIR] [--seed N] [--threads N]
    rank1thermo diff DIR_A DIR_B [--tol X]
    rank1thermo list-experiments

Exit codes: 0 pass, 1 assertion failure (a summary check failed, or a diff
found differences), 2 configuration error, 3 numeric failure. Nonzero run
exits leave a machine-readable error.json in the output directory when one
is known. RANK1_THERMO_THREADS is the fallback for --threads.
"""

import argparse
import json
import os
import sys

from .errors import ConfigError, NumericsError, Rank1ThermoError
from .experiments import (ExperimentConfig, diff_runs, list_experiments,
                          run_experiment)

EXIT_PASS = 0
EXIT_ASSERTION = 1
EXIT_CONFIG = 2
EXIT_NUMERIC = 3


def build_parser():
    p = argparse.ArgumentParser(
        prog="rank1thermo",
        description="geodesic-flow exponent and pressure experiments")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a named experiment")
    run.add_argument("experiment", nargs="?", default=None,
                     help="experiment name (omit when using --config)")
    run.add_argument("--config", default=None,
                     help="JSON config file (or inline JSON)")
    run.add_argument("--out", default=None, help="output directory")
    run.add_argument("--seed", type=int, default=None, help="rng seed")
    run.add_argument("--threads", type=int, default=None,
                     help="worker threads (results do not depend on this)")

    diff = sub.add_parser("diff", help="compare two run directories")
    diff.add_argument("dir_a")
    diff.add_argument("dir_b")
    diff.add_argument("--tol", type=float, default=0.0,
                      help="numeric tolerance for field differences")

    sub.add_parser("list-experiments", help="list experiment names")
    return p


def _error_report(out_dir, exc):
    report = {"error": type(exc).__name__, "message": str(exc)}
    if out_dir:
        try:
            os.makedirs(out_dir, exist_ok=True)
            with open(os.path.join(out_dir, "error.json"), "w") as fh:
                json.dump(report, fh, indent=1)
        except OSError:
            pass
    print("%s: %s" % (report["error"], report["message"]), file=sys.stderr)


def _cmd_run(args):
    if args.config is not None:
        cfg = ExperimentConfig.from_json(args.config)
        if args.experiment is not None and args.experiment != cfg.experiment:
            raise ConfigError("config names %r but the command line says %r"
                              % (cfg.experiment, args.experiment))
    elif args.experiment is not None:
        cfg = ExperimentConfig(experiment=args.experiment)
    else:
        raise ConfigError("give an experiment name or --config")
    if args.seed is not None:
        cfg.seed = args.seed
    if args.out is not None:
        cfg.out = args.out
    if cfg.out is None:
        cfg.out = os.path.join("runs", cfg.experiment)
    args.out = cfg.out  # so a failure report lands in the run directory

    result = run_experiment(cfg, threads=args.threads)
    for c in result.checks:
        print("%s %-28s measured %.6g tol %.6g  %s"
              % ("PASS" if c["passed"] else "FAIL", c["name"], c["measured"],
                 c["tolerance"], c["detail"]))
    print("%s: %s (%d checks, %.2fs) -> %s"
          % (result.experiment, "pass" if result.passed else "FAIL",
             len(result.checks), result.wall_time_s, result.out_dir))
    return EXIT_PASS if result.passed else EXIT_ASSERTION


def _cmd_diff(args):
    report = diff_runs(args.dir_a, args.dir_b, tol=args.tol)
    print(report.format())
    return EXIT_PASS if report.empty else EXIT_ASSERTION


def main(argv=None):
    args = build_parser().parse_args(argv)
    out_dir = getattr(args, "out", None)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "diff":
            return _cmd_diff(args)
        for name, desc in list_experiments():
            print("%-18s %s" % (name, desc))
        return EXIT_PASS
    except ConfigError as exc:
        _error_report(out_dir, exc)
        return EXIT_CONFIG
    except NumericsError as exc:
        _error_report(out_dir, exc)
        return EXIT_NUMERIC
    except Rank1ThermoError as exc:
        _error_report(out_dir, exc)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
