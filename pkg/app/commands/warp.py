"""
warp: synthesize the target view from a source image, a depth map, a pose and intrinsics
"""
import argparse
import json

import torch

from app.commands.common import CommandOutput, existing_file, prepare_out_dir
from app.core.exceptions import PreconditionException, ShapeMismatchException
from app.models.camera import Intrinsics
from app.models.grid import DTYPE, Grid
from app.schemas.losses import LossConfig
from app.services.geometry import assemble_k, compose_transform, warp_image
from app.services.losses import photometric_error
from app.utils.image_io import read_image, write_image, write_map


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("warp", help="Resample an image into the target view")
    parser.add_argument("--target", required=True, help="Image to resample (PPM, PGM or PFM)")
    parser.add_argument("--depth", required=True, help="Target-view depth map (1-channel PFM)")
    parser.add_argument(
        "--pose", nargs=6, type=float, required=True, metavar="V",
        help="Target-to-source transform: axis-angle (3) then translation (3)",
    )
    parser.add_argument(
        "--intrinsics", nargs=4, type=float, required=True, metavar="K",
        help="Normalized fx fy cx cy",
    )
    parser.add_argument("--padding", choices=["border", "zeros"], default="border")
    parser.add_argument("--reference", help="Optional image to score the result against")
    parser.add_argument("--out", required=True, help="Directory for warped.pfm and valid.pgm")
    parser.set_defaults(handler=handle)


def handle(args: argparse.Namespace) -> CommandOutput:
    image_path = existing_file(args.target)
    depth_path = existing_file(args.depth)
    image = read_image(image_path)
    depth = read_image(depth_path, kind="pfm-float")
    if depth.channels != 1:
        raise PreconditionException(f"Depth map must have 1 channel, got {depth.channels}")
    if not depth.same_dims(image):
        raise ShapeMismatchException(
            f"Depth is {depth.width}x{depth.height}, image is {image.width}x{image.height}"
        )
    intrinsics = Intrinsics(fx=args.intrinsics[0], fy=args.intrinsics[1], cx=args.intrinsics[2], cy=args.intrinsics[3])
    out_dir = prepare_out_dir(args.out)

    with torch.no_grad():
        k = assemble_k(intrinsics, image.width, image.height)
        transform = compose_transform(args.pose[:3], args.pose[3:])
        warped, flow = warp_image(image.to_tensor(), depth.to_tensor(), k, transform, args.padding)

    write_image(Grid.from_tensor(warped), out_dir / "warped.pfm", "pfm-float")
    write_map(Grid(data=flow.valid.numpy().astype("float64")), out_dir / "valid.pgm", "pgm-gray")

    result = {
        "width": image.width,
        "height": image.height,
        "valid_fraction": float(flow.valid.to(DTYPE).mean()),
        "outputs": [str(out_dir / "warped.pfm"), str(out_dir / "valid.pgm")],
    }
    inputs = [image_path, depth_path]
    if args.reference:
        reference_path = existing_file(args.reference)
        reference = read_image(reference_path)
        if reference.shape != image.shape:
            raise ShapeMismatchException("Reference image must match the warped image's shape")
        with torch.no_grad():
            error = photometric_error(reference.to_tensor(), warped, LossConfig())
        result["mean_photometric_error"] = float(error.mean())
        inputs.append(reference_path)

    config = {"pose": args.pose, "intrinsics": intrinsics.as_list(), "padding": args.padding}
    return CommandOutput(stdout=json.dumps(result, indent=2), config=config, inputs=inputs, out_dir=out_dir)
