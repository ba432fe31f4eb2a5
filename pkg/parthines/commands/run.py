"""``parthines run``: integrate one model with one method and write the trajectory."""

from __future__ import annotations

import argparse
import logging
from typing import Any, get_args

from parthines.commands import add_model_arguments, add_output_argument, open_output
from parthines.core.errors import UsageError
from parthines.models import resolve_model
from parthines.schemas.models import BlockAssignment
from parthines.schemas.solver import AdaptiveMethod, ConstantMethod, SolverConfig, ToleranceSpec
from parthines.services.adaptive import integrate_adaptive
from parthines.services.harness import MAX_TRAJECTORY_ROWS, write_trajectory_csv
from parthines.services.solvers import integrate_constant

logger = logging.getLogger(__name__)

CONSTANT_METHODS = get_args(ConstantMethod)
ADAPTIVE_METHODS = get_args(AdaptiveMethod)


def register(subparsers: Any) -> None:
    parser = subparsers.add_parser("run", help="integrate one model and write its trajectory")
    add_model_arguments(parser)
    parser.add_argument("--method", required=True, choices=CONSTANT_METHODS + ADAPTIVE_METHODS)
    parser.add_argument("--tol", type=float, help="relative tolerance (adaptive methods)")
    parser.add_argument("--h", type=float, help="step size (constant-step methods)")
    parser.add_argument("--steps", type=int, help="number of steps (constant-step methods)")
    parser.add_argument(
        "--dense",
        action="store_true",
        help=f"write every step instead of at most {MAX_TRAJECTORY_ROWS} rows",
    )
    add_output_argument(parser)
    parser.set_defaults(handler=handle)


def _step_count(args: argparse.Namespace, span: float) -> int:
    if args.steps is not None:
        if args.steps < 1:
            raise UsageError("--steps must be >= 1")
        return int(args.steps)
    if args.h is None:
        raise UsageError(f"--method {args.method} needs --h or --steps")
    if not args.h > 0.0:
        raise UsageError("--h must be positive")
    n_steps = round(span / args.h)
    if n_steps < 1 or abs(n_steps * args.h - span) > 1e-12 * span:
        raise UsageError(f"--h {args.h!r} does not divide the interval length {span!r}")
    return n_steps


def handle(args: argparse.Namespace) -> int:
    case = resolve_model(args.model, BlockAssignment(args.assignment))
    cfg = SolverConfig()
    if args.method in CONSTANT_METHODS:
        n_steps = _step_count(args, case.t_end - case.initial.t)
        record = integrate_constant(
            case.system, case.initial, case.t_end, n_steps, args.method, cfg
        )
    else:
        if args.tol is None:
            raise UsageError(f"--method {args.method} needs --tol")
        record = integrate_adaptive(
            case.system, case.initial, case.t_end, ToleranceSpec(rel_tol=args.tol), args.method, cfg
        )
    counter = record.counter
    logger.info(
        "%s/%s: %d steps (%d rejected), %.1f fevals",
        case.system.name,
        args.method,
        counter.steps_accepted,
        counter.steps_rejected,
        counter.fevals,
    )
    with open_output(args.output) as out:
        write_trajectory_csv(
            record, case.system, out, max_rows=None if args.dense else MAX_TRAJECTORY_ROWS
        )
    return 0
