"""``parthines sweep``: work-precision data for the adaptive methods."""

from __future__ import annotations

import argparse
from typing import Any, get_args

from parthines.commands import add_model_arguments, add_output_argument, open_output
from parthines.core.errors import UsageError
from parthines.models import resolve_model
from parthines.schemas.harness import SweepSpec, tolerance_grid
from parthines.schemas.models import BlockAssignment
from parthines.schemas.solver import AdaptiveMethod
from parthines.services.harness import run_sweep, write_sweep_csv

ADAPTIVE_METHODS = get_args(AdaptiveMethod)


def parse_methods(text: str) -> list[str]:
    methods = [m.strip() for m in text.split(",") if m.strip()]
    unknown = [m for m in methods if m not in ADAPTIVE_METHODS]
    if unknown or not methods:
        raise UsageError(
            f"unknown method(s) {', '.join(unknown) or repr(text)}; "
            f"choose from {', '.join(ADAPTIVE_METHODS)}"
        )
    return methods


def register(subparsers: Any) -> None:
    parser = subparsers.add_parser("sweep", help="work-precision sweep over a tolerance grid")
    add_model_arguments(parser)
    parser.add_argument(
        "--methods",
        default=",".join(ADAPTIVE_METHODS),
        help="comma-separated adaptive methods (default: %(default)s)",
    )
    parser.add_argument(
        "--kmax",
        type=int,
        default=48,
        help="TOL_k = 10^(-2 - k/8) for k = 0..kmax (default: %(default)s)",
    )
    parser.add_argument(
        "--threads", type=int, help="worker threads (default: PARTHINES_THREADS or 1)"
    )
    add_output_argument(parser)
    parser.set_defaults(handler=handle)


def handle(args: argparse.Namespace) -> int:
    methods = parse_methods(args.methods)
    if args.kmax < 0:
        raise UsageError("--kmax must be >= 0")
    if args.threads is not None and args.threads < 1:
        raise UsageError("--threads must be >= 1")
    assignment = BlockAssignment(args.assignment)
    case = resolve_model(args.model, assignment)
    spec = SweepSpec(
        model=case.name,
        methods=methods,
        assignment=assignment,
        tol_list=tolerance_grid(args.kmax),
    )
    points = run_sweep(spec, case=case, threads=args.threads)
    with open_output(args.output) as out:
        write_sweep_csv(points, out)
    return 0
