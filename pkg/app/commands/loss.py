"""
loss: combined photometric and smoothness loss for already-warped candidates
"""
import argparse

from app.commands.common import CommandOutput, comma_ints, existing_file, prepare_out_dir, to_json
from app.core.exceptions import PreconditionException, ShapeMismatchException
from app.schemas.losses import LossConfig
from app.services.losses import total_loss
from app.services.pyramid import build_pyramid
from app.utils.image_io import read_image, write_map


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("loss", help="Evaluate the view-synthesis loss")
    parser.add_argument("--target", required=True, help="Target image")
    parser.add_argument("--warped", nargs="+", required=True, help="Warped source candidates")
    parser.add_argument("--disparity", required=True, help="Disparity map in [0, 1] (1-channel PFM)")
    parser.add_argument("--alpha", type=float, default=0.85)
    parser.add_argument("--mu", type=float, default=1.0)
    parser.add_argument("--lambda", dest="lambda_", type=float, default=1e-3)
    parser.add_argument("--scales", type=comma_ints, default=[0, 1, 2, 3], help="e.g. 0,1,2,3")
    parser.add_argument("--border", type=int, default=0)
    parser.add_argument("--out", help="Directory for min_error.pfm")
    parser.set_defaults(handler=handle)


def handle(args: argparse.Namespace) -> CommandOutput:
    cfg = LossConfig(alpha=args.alpha, mu=args.mu, lambda_=args.lambda_, scales=args.scales, border=args.border)
    target_path = existing_file(args.target)
    warped_paths = [existing_file(path) for path in args.warped]
    disparity_path = existing_file(args.disparity)

    target = read_image(target_path)
    candidates = [read_image(path) for path in warped_paths]
    disparity = read_image(disparity_path, kind="pfm-float")
    for candidate in candidates:
        if candidate.shape != target.shape:
            raise ShapeMismatchException("Warped candidates must match the target's shape")
    if disparity.channels != 1 or not disparity.same_dims(target):
        raise ShapeMismatchException("Disparity must be a 1-channel map matching the target")
    if disparity.data.min() < 0.0 or disparity.data.max() > 1.0:
        raise PreconditionException("Disparity values must lie in [0, 1]")

    target_pyr = build_pyramid(target, cfg.num_levels)
    candidate_pyrs = [build_pyramid(candidate, cfg.num_levels) for candidate in candidates]
    disparity_pyr = build_pyramid(disparity, cfg.num_levels)
    breakdown = total_loss(
        target_pyr,
        [[pyramid[scale] for pyramid in candidate_pyrs] for scale in cfg.scales],
        [disparity_pyr[scale] for scale in cfg.scales],
        cfg,
        full_scale_warped=candidates,
    )

    out_dir = prepare_out_dir(args.out)
    if out_dir is not None:
        write_map(breakdown.min_error_map, out_dir / "min_error.pfm", "pfm-float")
    return CommandOutput(
        stdout=to_json(breakdown),
        config=cfg.model_dump(by_alias=True),
        inputs=[target_path, *warped_paths, disparity_path],
        out_dir=out_dir,
    )
