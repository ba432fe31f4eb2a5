"""One module per sub-command; each exposes ``register(subparsers)``."""

from __future__ import annotations

import argparse
import sys
from contextlib import contextmanager
from typing import Iterator, TextIO

from parthines.schemas.models import BlockAssignment

ASSIGNMENTS = [a.value for a in BlockAssignment]


@contextmanager
def open_output(path: str) -> Iterator[TextIO]:
    """``-`` writes to stdout."""
    if path == "-":
        yield sys.stdout
        return
    with open(path, "w", encoding="utf-8", newline="") as handle:
        yield handle


def add_model_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--model", required=True, help="hh, sds or the path of a model file")
    parser.add_argument(
        "--assignment",
        choices=ASSIGNMENTS,
        default=BlockAssignment.VOLTAGES_AS_X.value,
        help="which group plays the role of x (default: %(default)s)",
    )


def add_output_argument(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("-o", "--output", default="-", help="CSV destination (default: stdout)")
