"""
shuffle: pixel shuffle (or unshuffle) of channel-stacked PFM maps
"""
import argparse
import json

import numpy as np
import torch

from app.commands.common import CommandOutput, existing_file, prepare_out_dir
from app.core.exceptions import ShapeMismatchException
from app.models.grid import Grid
from app.services.upsample import pixel_shuffle, pixel_unshuffle
from app.utils.image_io import read_image, write_map


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("shuffle", help="Rearrange channels into space or back")
    parser.add_argument("--input", nargs="+", required=True, help="PFM files stacked along the channel axis")
    parser.add_argument("--factor", type=int, required=True, help="Upscale factor r")
    parser.add_argument("--inverse", action="store_true", help="Unshuffle instead")
    parser.add_argument("--out", required=True, help="Directory for channel_NN.pfm outputs")
    parser.set_defaults(handler=handle)


def handle(args: argparse.Namespace) -> CommandOutput:
    paths = [existing_file(path) for path in args.input]
    grids = [read_image(path, kind="pfm-float") for path in paths]
    if any(not grid.same_dims(grids[0]) for grid in grids):
        raise ShapeMismatchException("All input maps must share width and height")
    stacked = np.concatenate([grid.data for grid in grids], axis=2)
    tensor = torch.tensor(stacked.transpose(2, 0, 1), dtype=torch.float64)

    result = pixel_unshuffle(tensor, args.factor) if args.inverse else pixel_shuffle(tensor, args.factor)
    out_dir = prepare_out_dir(args.out)
    outputs = []
    for channel in range(result.shape[0]):
        path = out_dir / f"channel_{channel:02d}.pfm"
        write_map(Grid.from_tensor(result[channel]), path, "pfm-float")
        outputs.append(str(path))

    summary = {
        "input_shape": list(tensor.shape),
        "output_shape": list(result.shape),
        "outputs": outputs,
    }
    config = {"factor": args.factor, "inverse": args.inverse}
    return CommandOutput(stdout=json.dumps(summary, indent=2), config=config, inputs=paths, out_dir=out_dir)
