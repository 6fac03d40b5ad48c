"""Command line: ``lab run``, ``lab presets``, ``lab compare``.

Exit codes: 0 success, 2 validation error, 3 numerical failure, 4 drift.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .compare import CompareError, compare_runs, load_report
from .presets import PRESETS
from .report import emit_report
from .runner import StageError, run_scenario
from .scenario import ScenarioError, load_scenario

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL, EXIT_DRIFT = 0, 2, 3, 4


def _run(args) -> int:
    s = load_scenario(args.scenario)
    if args.seed is not None:
        s = s.with_seed(args.seed)
    r = run_scenario(s, accept_heuristic_parabolic=args.accept_heuristic_parabolic)
    out = Path(args.out) if args.out else Path("runs") / s.name
    emit_report(r, out)
    print(f"{s.name}: {r.verdict}")
    print(f"  {r.reason}")
    print(f"  report written to {out}")
    return EXIT_OK


def _presets(args) -> int:
    if args.name:
        if args.name not in PRESETS:
            raise ScenarioError(f"no preset named {args.name!r}")
        sys.stdout.write(PRESETS[args.name])
        return EXIT_OK
    for name in PRESETS:
        s = load_scenario(name)
        print(f"{name:24s} {s.description}")
    return EXIT_OK


def _compare(args) -> int:
    d = compare_runs(load_report(args.r1), load_report(args.r2))
    print("\n".join(d.lines()))
    return EXIT_DRIFT if d.failed else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lab", description="Shadowing experiments for attracting basins on C^2.")
    sub = ap.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run a scenario file or preset name")
    run.add_argument("scenario", help="YAML scenario file or preset name")
    run.add_argument("--out", help="output directory (default runs/<name>)")
    run.add_argument("--seed", type=int, help="override the scenario seed")
    run.add_argument("--accept-heuristic-parabolic", action="store_true",
                     help="let heuristic parabolic membership count toward the verdict")
    run.set_defaults(fn=_run)
    pr = sub.add_parser("presets", help="list presets, or print one as YAML")
    pr.add_argument("name", nargs="?")
    pr.set_defaults(fn=_presets)
    cmp_ = sub.add_parser("compare", help="drift between two reports (files or run directories)")
    cmp_.add_argument("r1")
    cmp_.add_argument("r2")
    cmp_.set_defaults(fn=_compare)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (ScenarioError, CompareError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except StageError as exc:
        if isinstance(exc.cause, ScenarioError):
            print(f"error: {exc.cause}", file=sys.stderr)
            return EXIT_VALIDATION
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ArithmeticError, RuntimeError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
