"""``parthines converge``: observed order of a constant-step method."""

from __future__ import annotations

import argparse
import logging
from typing import Any, get_args

from parthines.commands import add_model_arguments, add_output_argument, open_output
from parthines.core.errors import UsageError
from parthines.models import resolve_model
from parthines.schemas.models import BlockAssignment
from parthines.schemas.solver import ConstantMethod
from parthines.services.harness import convergence_study, halving_steps, write_convergence_csv

logger = logging.getLogger(__name__)


def register(subparsers: Any) -> None:
    parser = subparsers.add_parser(
        "converge", help="final-time errors over halved step sizes and the log-log slope"
    )
    add_model_arguments(parser)
    parser.add_argument("--method", required=True, choices=get_args(ConstantMethod))
    parser.add_argument(
        "--steps", type=int, default=6, help="number of step sizes (default: %(default)s)"
    )
    parser.add_argument(
        "--k0", type=int, default=8, help="largest step is span / 2^k0 (default: %(default)s)"
    )
    add_output_argument(parser)
    parser.set_defaults(handler=handle)


def handle(args: argparse.Namespace) -> int:
    if args.steps < 2:
        raise UsageError("--steps must be >= 2 to measure a slope")
    if args.k0 < 0:
        raise UsageError("--k0 must be >= 0")
    case = resolve_model(args.model, BlockAssignment(args.assignment))
    step_list = halving_steps(case.t_end - case.initial.t, args.k0, args.steps)
    table = convergence_study(case, args.method, step_list)
    logger.info("%s/%s: observed order %.3f", case.system.name, args.method, table.slope)
    with open_output(args.output) as out:
        write_convergence_csv(table, out)
    return 0
