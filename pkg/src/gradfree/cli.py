"""Command-line entry point.

Exit codes: 0 success, 1 solver error, 2 configuration error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys

from . import harness
from .errors import ConfigError, GradFreeError

EXIT_OK, EXIT_SOLVER, EXIT_CONFIG = 0, 1, 2


def _print_checks(checks, out):
    for c in checks:
        tag = c.status.upper() + (" (documented)" if c.documented and not c.passed else "")
        print(f"  [{tag}] {c.name}: {c.detail}", file=out)


def _print_summary(summary, out):
    point = ", ".join(f"{v:.10g}" for v in summary.final_point[:6])
    if len(summary.final_point) > 6:
        point += ", ..."
    print(f"{summary.name}: final point ({point}), value {summary.final_value:.6g}, "
          f"{summary.iterations} iterations, {summary.total_oracle_calls} oracle calls, "
          f"{summary.wall_time_ms:.1f} ms -> {summary.csv_path}", file=out)
    _print_checks(summary.invariant_check_results, out)


def cmd_run(args, out):
    data = harness.load_config(args.config)
    if args.seed is not None:
        data["seed"] = args.seed
    if args.force:
        data["force"] = True
    if args.out is not None:
        data["output_path"] = args.out
    cfg = harness.ExperimentConfig.from_dict(data)
    _print_summary(harness.run_experiment(cfg), out)
    return EXIT_OK


def cmd_preset(args, out):
    result = harness.run_preset(args.name, args.out, seed=args.seed or 0, force=args.force)
    for s in result.summaries:
        _print_summary(s, out)
    if result.checks:
        print(f"{args.name}:", file=out)
        _print_checks(result.checks, out)
    print(f"preset {args.name}: {'all checks pass' if result.passed else 'CHECK FAILURES'}",
          file=out)
    return EXIT_OK


def cmd_verify_class(args, out):
    report = harness.verify_class_cmd(harness.load_config(args.config))
    print(f"{report.kind} class: holds={report.holds}, {report.checked} points checked, "
          f"{len(report.violations)} violations", file=out)
    print(f"  worst lower margin {report.worst_lower_margin:.6g}, "
          f"worst upper margin {report.worst_upper_margin:.6g}", file=out)
    for v in report.violations[:args.max_show]:
        coords = ", ".join(f"{c:.6g}" for c in v.point)
        print(f"  ({coords}): lower {v.lower_margin:.4g}, upper {v.upper_margin:.4g}", file=out)
    if args.json:
        print(json.dumps(report.to_dict()), file=out)
    return EXIT_OK


def cmd_list(args, out):
    for name, desc in harness.list_presets():
        print(f"{name:14s} {desc}", file=out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gradfree", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one experiment described by a JSON config")
    p.add_argument("config")
    p.add_argument("--out", help="output directory (overrides the config)")
    p.add_argument("--seed", type=int)
    p.add_argument("--force", action="store_true", help="allow multibbs with d > 3")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("preset", help="reproduce a named experiment")
    p.add_argument("name")
    p.add_argument("--out")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_preset)

    p = sub.add_parser("verify-class", help="sampled check of a function-class condition")
    p.add_argument("config")
    p.add_argument("--max-show", type=int, default=10)
    p.add_argument("--json", action="store_true", help="also print the report as JSON")
    p.set_defaults(func=cmd_verify_class)

    p = sub.add_parser("list-presets", help="list the preset registry")
    p.set_defaults(func=cmd_list)
    return parser


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args, out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except GradFreeError as exc:
        print(f"solver error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
