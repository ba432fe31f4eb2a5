"""``parthines stability``: verdicts on the 2x2 test system over a grid of step sizes."""

from __future__ import annotations

import argparse
import csv
import math
from typing import Any, get_args

from parthines.commands import add_output_argument, open_output
from parthines.core.errors import StabilityDomainError, UsageError
from parthines.schemas.stability import RecursionMethod, TestSystemParams
from parthines.services.harness import FLOAT_FORMAT
from parthines.services.stability import stability_boundary_h, verdict

HEADER = (
    "method",
    "h",
    "alpha",
    "beta",
    "gamma",
    "stable",
    "margin",
    "spectral_radius",
    "h_boundary",
)


def parse_grid(text: str) -> list[float]:
    try:
        grid = [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise UsageError(f"--h expects comma-separated numbers, got {text!r}") from exc
    if not grid or any(not h > 0.0 for h in grid):
        raise UsageError("--h needs at least one positive step size")
    return grid


def register(subparsers: Any) -> None:
    parser = subparsers.add_parser(
        "stability", help="stability verdicts for x' = mu x + a y, y' = b x + lambda y"
    )
    parser.add_argument("--mu", type=float, required=True)
    parser.add_argument("--lambda", dest="lam", type=float, required=True)
    parser.add_argument("--a", type=float, default=0.0)
    parser.add_argument("--b", type=float, default=0.0)
    parser.add_argument("--h", required=True, help="comma-separated step sizes")
    parser.add_argument("--method", choices=get_args(RecursionMethod), default="modified")
    add_output_argument(parser)
    parser.set_defaults(handler=handle)


def handle(args: argparse.Namespace) -> int:
    grid = parse_grid(args.h)
    params = TestSystemParams.model_validate(
        {"mu": args.mu, "lambda": args.lam, "a": args.a, "b": args.b}
    )
    try:
        boundary = stability_boundary_h(params, args.method)
    except StabilityDomainError:
        # no boundary outside mu, lambda < 0 and gamma < 1
        boundary = math.nan
    with open_output(args.output) as out:
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(HEADER)
        for h in grid:
            v = verdict(params, h, args.method)
            writer.writerow(
                [
                    v.method,
                    format(v.h, FLOAT_FORMAT),
                    format(v.alpha, FLOAT_FORMAT),
                    format(v.beta, FLOAT_FORMAT),
                    format(v.gamma, FLOAT_FORMAT),
                    "true" if v.stable else "false",
                    format(v.margin, FLOAT_FORMAT),
                    format(v.spectral_radius, FLOAT_FORMAT),
                    format(boundary, FLOAT_FORMAT),
                ]
            )
    return 0
