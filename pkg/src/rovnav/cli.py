"""Command line entry point.

    rovnav run <config.toml> [--seed N] [--jobs N] [--backend B] [--dry-run] [--output DIR]
    rovnav courses list
    rovnav report <output_dir>
    rovnav plotdata <run_dir>

Exit codes: 0 success, 1 invalid configuration or input, 2 a run diverged or
timed out (its partial artifacts are kept).
"""

import argparse
import sys
from typing import List, Optional

from .config import ConfigError, parse_config
from .evaluation import BUILTIN_COURSES, builtin_course
from .experiment import IncompleteLogError, emit_plot_data, run_experiments, write_report

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_RUNTIME = 2


def _positive_int(text: str) -> int:
    val = int(text)
    if val < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return val


def _seed(text: str) -> int:
    val = int(text)
    if val < 0:
        raise argparse.ArgumentTypeError("must be >= 0")
    return val


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rovnav", description="RexROV localization experiments")
    sub = parser.add_subparsers(dest="verb", required=True)

    run = sub.add_parser("run", help="run the experiment grid described by a TOML config")
    run.add_argument("config")
    run.add_argument("--seed", type=_seed, help="run only this seed")
    run.add_argument("--jobs", type=_positive_int, help="parallel runs (default: config value)")
    run.add_argument("--backend", choices=("dynamic", "kinematic", "both"), help="override the backends")
    run.add_argument("--dry-run", action="store_true", help="print the resolved grid and exit")
    run.add_argument("--output", help="output directory (default: config value)")

    courses = sub.add_parser("courses", help="built-in test courses")
    courses.add_argument("action", choices=("list",))

    report = sub.add_parser("report", help="rebuild report.csv from run directories")
    report.add_argument("dir")

    plot = sub.add_parser("plotdata", help="write plot-ready CSVs for one run directory")
    plot.add_argument("run_dir")
    return parser


def _cmd_run(args, out, err) -> int:
    try:
        spec = parse_config(args.config, seed=args.seed, backend=args.backend, output_dir=args.output)
    except ConfigError as exc:
        where = f"{exc.path}: " if exc.path else ""
        for p in exc.problems:
            print(f"error: {where}{p}", file=err)
        return EXIT_INVALID
    outcomes = run_experiments(spec, jobs=args.jobs, dry_run=args.dry_run, out=out)
    if args.dry_run:
        return EXIT_OK
    failed = [o for o in outcomes if not o.ok]
    for o in outcomes:
        print(f"{o.run_id}: {o.status}", file=out)
    for o in failed:
        print(f"error: {o.message}", file=err)
    print(f"report: {spec.output_dir / 'report.csv'}", file=out)
    return EXIT_RUNTIME if failed else EXIT_OK


def _cmd_courses(args, out, err) -> int:
    print("id,waypoints,length_m", file=out)
    for cid in BUILTIN_COURSES:
        c = builtin_course(cid)
        ref = c.reference
        length = float(((ref[1:] - ref[:-1]) ** 2).sum(axis=1).__pow__(0.5).sum())
        print(f"{cid},{len(c.waypoints)},{length:.1f}", file=out)
    return EXIT_OK


def _cmd_report(args, out, err) -> int:
    try:
        path = write_report(args.dir)
    except (IncompleteLogError, OSError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=err)
        return EXIT_INVALID
    print(path.read_text(), end="", file=out)
    return EXIT_OK


def _cmd_plotdata(args, out, err) -> int:
    try:
        paths = emit_plot_data(args.run_dir)
    except (IncompleteLogError, OSError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=err)
        return EXIT_INVALID
    for p in paths.values():
        print(p, file=out)
    return EXIT_OK


def main(argv: Optional[List[str]] = None, out=None, err=None) -> int:
    out = sys.stdout if out is None else out
    err = sys.stderr if err is None else err
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INVALID
    handler = {"run": _cmd_run, "courses": _cmd_courses, "report": _cmd_report, "plotdata": _cmd_plotdata}
    return handler[args.verb](args, out, err)


if __name__ == "__main__":
    sys.exit(main())
