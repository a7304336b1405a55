"""Command-line driver: run scenarios, refinement studies, list bundles.

Exit codes: 0 when every verdict holds, 1 on configuration or numerical
errors, 2 when a monitored bound is violated or a fitted order falls
below the passing threshold.
"""

from __future__ import annotations

import argparse
import os
import sys

from .config import ConfigError
from .flow import StabilityError
from .reporting import render_text, write_outputs
from .runner import execute_scenario
from .scenarios import registry_table, resolve_config
from .study import render_study_text, run_study, write_study_outputs

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_VIOLATION = 2


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("config",
                        help="bundled scenario name or path to a config file")
    parser.add_argument("--out", default="runs",
                        help="output root; files go to <out>/<scenario>/")
    parser.add_argument("--tolerance", type=float, default=None,
                        help="override every monitor tolerance")
    parser.add_argument("--max-steps", type=int, default=None,
                        help="abort if a flow needs more steps than this")
    parser.add_argument("--quiet", action="store_true",
                        help="suppress stdout summary")


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="harnacklab",
        description="Monitor Harnack-type bounds for heat equations "
                    "coupled to curvature flows on model backgrounds.")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="execute one scenario, write reports")
    _add_common(run_p)
    run_p.add_argument("--bound-shift", type=float, default=0.0,
                       help="lower every monitored bound by this amount "
                            "(synthetic violation injection)")
    run_p.add_argument("--no-figures", action="store_true",
                       help="skip PNG rendering")

    study_p = sub.add_parser(
        "study", help="refinement study: rerun at doubled resolutions "
                      "and fit observed orders")
    _add_common(study_p)
    study_p.add_argument("--levels", type=int, default=3,
                         help="number of resolutions, each double the last")

    sub.add_parser("list", help="list bundled scenarios")
    return parser


def _cmd_run(args: argparse.Namespace) -> int:
    cfg = resolve_config(args.config)
    report = execute_scenario(cfg, tolerance=args.tolerance,
                              max_steps=args.max_steps,
                              bound_shift=args.bound_shift)
    written = write_outputs(report, args.out, figures=not args.no_figures)
    if not args.quiet:
        sys.stdout.write(render_text(report))
        print(f"wall clock: {report.wall_clock:.2f} s")
        print(f"wrote {len(written)} files under "
              f"{os.path.join(args.out, cfg.name)}")
    return EXIT_OK if report.verdict else EXIT_VIOLATION


def _cmd_study(args: argparse.Namespace) -> int:
    cfg = resolve_config(args.config)
    report = run_study(cfg, levels=args.levels, max_steps=args.max_steps)
    write_study_outputs(report, args.out)
    if not args.quiet:
        sys.stdout.write(render_study_text(report))
        print(f"wall clock: {report.wall_clock:.2f} s")
    return EXIT_OK if report.verdict else EXIT_VIOLATION


def _cmd_list() -> int:
    rows = registry_table()
    width = max(len(name) for name, _, _ in rows)
    for name, theorems, title in rows:
        print(f"{name:<{width}}  thms {theorems:<20}  {title}")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.command == "list":
            return _cmd_list()
        if args.command == "run":
            return _cmd_run(args)
        return _cmd_study(args)
    except (ConfigError, StabilityError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
