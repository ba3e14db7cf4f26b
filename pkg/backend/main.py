# backend/main.py - ids-engine command line (slim shell)
# Subcommand handlers live in commands/. This file owns: argument parsing, logging
# setup, run-config validation, and the mapping from errors to exit codes.
import argparse
import logging
import sys
from typing import List, Optional

from pydantic import ValidationError

from commands import COMMANDS
from commands.state import EXIT_FAILURE, EXIT_OK, EXIT_USAGE, LOG_FORMAT, TOOL_NAME, RunConfig, version_string
from errors import USAGE_ERRORS, IdsError

logger = logging.getLogger("cli")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog=TOOL_NAME, description="Three-layer intrusion detection with a DHCP verifier")
    parser.add_argument("--version", action="version", version=version_string())
    noise = parser.add_mutually_exclusive_group()
    noise.add_argument("-v", "--verbose", action="store_const", const=1, dest="verbosity", default=0)
    noise.add_argument("-q", "--quiet", action="store_const", const=-1, dest="verbosity")

    subparsers = parser.add_subparsers(dest="subcommand", metavar="COMMAND")
    subparsers.required = True
    for command in COMMANDS:
        command.register(subparsers)
    return parser


def configure_logging(verbosity: int) -> None:
    level = {-1: logging.WARNING, 0: logging.INFO, 1: logging.DEBUG}[verbosity]
    logging.basicConfig(level=level, format=LOG_FORMAT, stream=sys.stderr, force=True)


def run(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # --help / --version exit 0; argparse usage errors exit 2
        return EXIT_OK if e.code in (0, None) else EXIT_USAGE

    configure_logging(args.verbosity)

    policy_path = getattr(args, "policy_path", None)
    try:
        config = RunConfig(
            subcommand=args.subcommand,
            inputs=args.inputs(args),
            outputs=args.outputs(args),
            policy=policy_path(args) if policy_path else None,
            seed=getattr(args, "seed", None),
            verbosity=args.verbosity,
        )
    except ValidationError as e:
        logger.error(e.errors()[0]["msg"])
        return EXIT_USAGE

    try:
        return args.handler(args, config)
    except USAGE_ERRORS as e:
        logger.error(f"{type(e).__name__}: {e}")
        return EXIT_USAGE
    except IdsError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return EXIT_FAILURE


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
