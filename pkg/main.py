"""
viewsynth-depth - command-line entry point
"""
import argparse
import sys
import time
from typing import Optional, Sequence

import torch
from pydantic import ValidationError

from app.commands import COMMAND_MODULES
from app.core.config import settings
from app.core.exceptions import EXIT_DOMAIN_ERROR, EXIT_USAGE_ERROR, BaseAppException
from app.core.logging import bind_run, logger
from app.services.run_manifest import build_manifest, emit_manifest


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog=settings.APP_NAME,
        description="View-synthesis geometry, losses, gradient checks and depth evaluation",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {settings.APP_VERSION}")
    subparsers = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    for module in COMMAND_MODULES:
        module.register(subparsers)
    return parser


def configure_runtime() -> None:
    """Apply tensor-backend settings from the environment."""
    if settings.NUM_THREADS > 0:
        torch.set_num_threads(settings.NUM_THREADS)
    torch.use_deterministic_algorithms(settings.DETERMINISTIC)


def dispatch(argv: Optional[Sequence[str]] = None) -> int:
    """
    Parse ``argv``, run the subcommand and return the process exit code.

    Results go to stdout; diagnostics and the run manifest (when there is no
    --out directory) go to stderr through the logger.

    Returns:
        0 on success, 1 on a domain error, 2 on a usage error
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_USAGE_ERROR

    configure_runtime()
    with bind_run(subcommand=args.command, seed=getattr(args, "seed", None)):
        return _run(args)


def _run(args: argparse.Namespace) -> int:
    started = time.perf_counter()
    try:
        output = args.handler(args)
        manifest = build_manifest(
            args.command, output.config, output.inputs, time.perf_counter() - started, output.seed
        )
        sys.stdout.write(output.stdout + "\n")
        emit_manifest(manifest, output.out_dir)
        return output.exit_code
    except BaseAppException as e:
        logger.error(
            e.detail,
            exc_info=settings.DEBUG,
            extra={"context": {"exit_code": e.exit_code}},
        )
        return e.exit_code
    except ValidationError as e:
        logger.error(
            f"Invalid option values: {e.error_count()} error(s)",
            extra={"context": {"errors": e.errors(include_url=False)}},
        )
        return EXIT_USAGE_ERROR
    except OSError as e:
        logger.error(f"File access failed: {e}")
        return EXIT_DOMAIN_ERROR


def main() -> None:
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
