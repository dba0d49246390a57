"""Command-line entry point.

    robustqaoa run CONFIG        optimize and evaluate one experiment (or a depth sweep)
    robustqaoa scan CONFIG       fidelity landscape over a box as CSV
    robustqaoa table LIST        comparison table over several configs
    robustqaoa selftest          invariant suite

Exit codes: 0 success, 1 configuration error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import bench, config, selftest
from .errors import ConfigInvalid, NumericalError, RobustQaoaError

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2


def _cmd_run(args):
    cfg = config.load(args.config)
    reports = bench.run_depth_sweep(cfg) if cfg.depths else [bench.run_experiment(cfg)]
    bench.write_report_csv(reports, sys.stdout)
    out = args.output or cfg.output
    if out:
        bench.write_outputs(out, reports)
    return EXIT_OK


def _cmd_scan(args):
    cfg = config.load(args.config)
    scan = cfg.scan or {}
    box = scan.get("box", cfg.box)
    ppa = scan.get("points_per_axis", cfg.evaluation.points_per_axis)
    if "theta" in scan:
        instance = bench.instance_for(cfg)
        theta = np.asarray(scan["theta"], dtype=float)
    else:
        report = bench.run_experiment(cfg)
        instance = bench.instance_for(cfg)
        theta = np.asarray(report.theta)
    records = bench.landscape_scan(instance, theta, box, ppa)
    out = args.output or cfg.output
    if out:
        path = Path(out)
        path.mkdir(parents=True, exist_ok=True)
        with open(path / "scan.csv", "w", newline="") as fh:
            bench.write_scan_csv(records, fh)
    bench.write_scan_csv(records, sys.stdout)
    return EXIT_OK


def _cmd_table(args):
    configs, out = config.load_list(args.config_list)
    table = bench.compare_table(configs)
    sys.stdout.write(table.to_text())
    out = args.output or out
    if out:
        path = Path(out)
        path.mkdir(parents=True, exist_ok=True)
        with open(path / "table.csv", "w", newline="") as fh:
            table.to_csv(fh)
        (path / "table.txt").write_text(table.to_text())
    return EXIT_OK


def _cmd_selftest(args):
    results = selftest.run_selftest(sys.stdout)
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return EXIT_OK if not failed else EXIT_NUMERICAL


def build_parser():
    parser = argparse.ArgumentParser(prog="robustqaoa", description="Robust QAOA control optimization.")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="-v for info, -vv for debug logs")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one experiment config")
    p.add_argument("config")
    p.add_argument("-o", "--output", help="output directory (overrides the config)")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("scan", help="fidelity landscape scan")
    p.add_argument("config")
    p.add_argument("-o", "--output")
    p.set_defaults(func=_cmd_scan)

    p = sub.add_parser("table", help="comparison table over a config list")
    p.add_argument("config_list")
    p.add_argument("-o", "--output")
    p.set_defaults(func=_cmd_table)

    p = sub.add_parser("selftest", help="run the invariant suite")
    p.set_defaults(func=_cmd_selftest)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    level = {0: logging.WARNING, 1: logging.INFO}.get(args.verbose, logging.DEBUG)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigInvalid as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, ArithmeticError) as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (RobustQaoaError, ValueError, TypeError) as exc:
        # invalid values that only surface while building the experiment
        print(f"config error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
