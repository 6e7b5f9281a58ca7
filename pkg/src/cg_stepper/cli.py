"""Command line entry point ``cg-stepper``.

Exit codes: 0 on success, 1 on usage errors, 2 when a solve fails
(non-convergence, singular operator, non-finite values).
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import harness
from .cg_core import Scheme
from .harness import ExperimentSpec, SweepError
from .problem import PROBLEMS

EXIT_USAGE = 1
EXIT_SOLVER = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--problem", choices=sorted(PROBLEMS), default="ex1")
    common.add_argument("--order", "-r", type=int, nargs="+", metavar="R",
                        help="polynomial degree(s)")
    common.add_argument("--elements", "-N", type=int, nargs="+", metavar="N",
                        help="number(s) of time intervals")
    common.add_argument("--scheme", choices=[s.value for s in Scheme],
                        default=Scheme.SIMPLIFIED_NEWTON.value)
    common.add_argument("--tol", type=float, default=1e-14,
                        help="absolute tolerance on the nodal update (default 1e-14)")
    common.add_argument("--rtol", type=float, default=0.0)
    common.add_argument("--max-iter", type=int, default=100)
    common.add_argument("--quad", type=int, default=None,
                        help="Gauss points per interval (default r+2)")
    common.add_argument("--floor", type=float, default=5e-14,
                        help="stop refining once the L2 error drops below this")
    common.add_argument("--max-elements", type=int, default=8192)
    common.add_argument("--check-step-bound", action="store_true",
                        help="warn about steps above the sufficient contraction bound")
    common.add_argument("--format", choices=["csv", "md"], default="csv")
    common.add_argument("--out", type=Path, default=None,
                        help="write output here instead of stdout")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="cg-stepper",
                     description="hp continuous Galerkin time stepping experiments")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("solve", parents=[common],
                   help="solve on fixed meshes, one row per (N, r)")
    sub.add_parser("h-sweep", parents=[common],
                   help="bisection sweep from one element")
    sub.add_parser("p-sweep", parents=[common],
                   help="degree sweep on fixed meshes")
    sub.add_parser("compare", parents=[common],
                   help="simplified Newton vs Picard iteration counts on an h-sweep")
    return parser


def _spec(args) -> ExperimentSpec:
    mode = {"solve": "single", "h-sweep": "h", "p-sweep": "p",
            "compare": "h"}[args.command]
    if mode == "p":
        degrees = args.order or harness.DEFAULT_P_DEGREES
        elements = args.elements or harness.DEFAULT_P_MESHES
    else:
        degrees = args.order or (1,)
        elements = args.elements or (1,)
    try:
        return ExperimentSpec(
            problem=args.problem, mode=mode, degrees=degrees, elements=elements,
            scheme=args.scheme, tol_abs=args.tol, tol_rel=args.rtol,
            max_iter=args.max_iter, quad=args.quad, format=args.format,
            error_floor=args.floor, max_elements=args.max_elements,
            check_step_bound=args.check_step_bound)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    logging.captureWarnings(True)
    try:
        spec = _spec(args)
        if args.command == "compare":
            pairs = harness.run_scheme_comparison(spec)
            rows = [row for pair in pairs for row in pair]
            columns = ("l2_error", "iterations")
        else:
            rows = harness.run(spec)
            columns = ("l2_error", "eoc")
    except (UsageError, ValueError) as exc:
        print(f"cg-stepper: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SweepError as exc:
        print(f"cg-stepper: {exc}", file=sys.stderr)
        return EXIT_SOLVER

    text = harness.emit(rows, spec.format, columns)
    if args.out is None:
        sys.stdout.write(text)
    else:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        args.out.write_text(text, newline="\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
