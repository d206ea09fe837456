"""
maskadjust: merge instance masks and flatten disparity inside each qualifying object
"""
import argparse
import json

import numpy as np

from app.commands.common import CommandOutput, comma_ints, existing_file, prepare_out_dir
from app.schemas.adjust import DEFAULT_CLASS_ALLOWLIST, AdjustConfig
from app.services.semantic_adjust import adjust_disparity, merge_masks, qualifying_instances
from app.utils.image_io import load_instances, manifest_mask_paths, read_image, write_map


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("maskadjust", help="Object-coherent disparity adjustment")
    parser.add_argument("--disparity", required=True, help="Disparity map (1-channel PFM)")
    parser.add_argument("--instances", required=True, help="JSON manifest of instance masks")
    parser.add_argument("--threshold", type=float, default=0.7, help="Minimum detection confidence")
    parser.add_argument("--classes", type=comma_ints, help="Allowed class ids, e.g. 1,3")
    parser.add_argument("--strategy", choices=["median-flatten", "none"], default="median-flatten")
    parser.add_argument("--out", required=True, help="Directory for adjusted.pfm and merged_mask.pgm")
    parser.set_defaults(handler=handle)


def handle(args: argparse.Namespace) -> CommandOutput:
    cfg = AdjustConfig(
        confidence_threshold=args.threshold,
        class_allowlist=frozenset(args.classes) if args.classes else DEFAULT_CLASS_ALLOWLIST,
        strategy=args.strategy,
    )
    disparity_path = existing_file(args.disparity)
    manifest_path = existing_file(args.instances)
    disparity = read_image(disparity_path, kind="pfm-float")
    instances = load_instances(manifest_path)

    merged = merge_masks(instances, cfg, disparity.height, disparity.width)
    adjusted = adjust_disparity(disparity, instances, cfg)
    out_dir = prepare_out_dir(args.out)
    write_map(adjusted, out_dir / "adjusted.pfm", "pfm-float")
    write_map(merged, out_dir / "merged_mask.pgm", "pgm-gray")

    summary = {
        "instances": len(instances),
        "qualifying": len(qualifying_instances(instances, cfg)),
        "masked_pixels": int(merged.data.sum()),
        "changed_pixels": int(np.count_nonzero(adjusted.data != disparity.data)),
    }
    return CommandOutput(
        stdout=json.dumps(summary, indent=2),
        config=cfg.model_dump(mode="json"),
        inputs=[disparity_path, manifest_path, *manifest_mask_paths(manifest_path)],
        out_dir=out_dir,
    )
