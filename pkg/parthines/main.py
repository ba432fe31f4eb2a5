"""Command-line entry point: ``parthines {run,converge,sweep,stability}``."""

from __future__ import annotations

import argparse
import logging
import sys
from typing import NoReturn, Optional, Sequence

from pydantic import ValidationError

from parthines.commands import converge, run, stability, sweep
from parthines.core.errors import ParthinesError, UsageError

logger = logging.getLogger("parthines")

EXIT_OK = 0
EXIT_USAGE = UsageError.exit_code
EXIT_NUMERICAL = ParthinesError.exit_code


class CliParser(argparse.ArgumentParser):
    """Report usage problems as UsageError instead of exiting with status 2."""

    def error(self, message: str) -> NoReturn:
        raise UsageError(f"{self.prog}: {message}")


def build_parser() -> CliParser:
    parser = CliParser(
        prog="parthines",
        description="Hines-type splitting integrators for semilinear partitioned ODEs",
    )
    parser.add_argument(
        "-v", "--verbose", action="count", default=0, help="-v for INFO, -vv for DEBUG logging"
    )
    subparsers = parser.add_subparsers(dest="command", required=True, parser_class=CliParser)

    # ---------------------------------------------------------
    # 🧩 Register sub-commands
    # ---------------------------------------------------------
    run.register(subparsers)
    converge.register(subparsers)
    sweep.register(subparsers)
    stability.register(subparsers)
    return parser


def configure_logging(verbosity: int) -> None:
    level = logging.WARNING if verbosity <= 0 else logging.INFO if verbosity == 1 else logging.DEBUG
    logging.basicConfig(format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    logging.getLogger().setLevel(level)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"error: {exc.message}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return int(exc.code or 0)

    configure_logging(args.verbose)
    try:
        return int(args.handler(args))
    except ValidationError as exc:
        print(f"error: invalid arguments: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ParthinesError as exc:
        logger.debug("command %s failed", args.command, exc_info=True)
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
