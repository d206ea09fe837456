"""
gradcheck: compare analytic gradients with central differences on a built-in scene
"""
import argparse

from app.commands.common import CommandOutput, to_json
from app.core.config import settings
from app.core.exceptions import EXIT_DOMAIN_ERROR, EXIT_OK
from app.services.autodiff import run_gradcheck


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("gradcheck", help="Verify gradients by finite differences")
    parser.add_argument("--width", type=int, default=8)
    parser.add_argument("--height", type=int, default=8)
    parser.add_argument("--seed", type=int, default=settings.DEFAULT_SEED)
    parser.add_argument("--samples", type=int, default=200, help="Coordinates per parameter group")
    parser.add_argument("--h", type=float, default=1e-4, help="Finite-difference step")
    parser.add_argument("--tol", type=float, default=1e-4)
    parser.set_defaults(handler=handle)


def handle(args: argparse.Namespace) -> CommandOutput:
    report = run_gradcheck(args.width, args.height, args.seed, args.samples, args.h, args.tol)
    config = {"width": args.width, "height": args.height, "samples": args.samples, "h": args.h, "tol": args.tol}
    return CommandOutput(
        stdout=to_json(report),
        config=config,
        inputs=[],
        seed=args.seed,
        exit_code=EXIT_OK if report.passed else EXIT_DOMAIN_ERROR,
    )
