"""
train-toy: recover depth, pose and intrinsics of a synthetic scene by direct optimization
"""
import argparse
import csv
import io
import json

from app.commands.common import CommandOutput, comma_list, prepare_out_dir, to_json, write_text
from app.core.config import settings
from app.schemas.training import AdamWHyper, TrainConfig
from app.services.scene_synthesis import make_scene
from app.services.toytrain import TOY_LOSS_CONFIG, optimize, recovered_depth, summarize
from app.utils.image_io import write_map


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("train-toy", help="Optimize a synthetic scene with AdamW")
    parser.add_argument("--size", type=int, default=64, help="Square image size in pixels")
    parser.add_argument("--profile", choices=["fronto-plane", "slanted-plane", "two-layer"], default="fronto-plane")
    parser.add_argument("--free", type=comma_list, default=["depth"], help="Subset of depth,pose,intrinsics")
    parser.add_argument("--steps", type=int, default=2000)
    parser.add_argument("--lr", type=float, default=1e-4)
    parser.add_argument("--weight-decay", type=float, default=5e-2)
    parser.add_argument("--schedule", choices=["cosine", "constant"], default="cosine")
    parser.add_argument("--freeze-rotation", action="store_true", help="Keep free poses rotation-free")
    parser.add_argument("--pose-magnitude", type=float, default=4.0, help="Parallax in pixels")
    parser.add_argument("--texture-freq", type=float, default=4.0)
    parser.add_argument("--seed", type=int, default=settings.DEFAULT_SEED)
    parser.add_argument("--out", help="Directory for depth.pfm, params.json and history.csv")
    parser.set_defaults(handler=handle)


def _history_csv(history) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["step", "loss"])
    for step, loss in enumerate(history):
        writer.writerow([step, repr(loss)])
    return buffer.getvalue()


def handle(args: argparse.Namespace) -> CommandOutput:
    train_cfg = TrainConfig(
        hyper=AdamWHyper(lr=args.lr, weight_decay=args.weight_decay),
        free=frozenset(args.free),
        steps=args.steps,
        schedule=args.schedule,
        freeze_rotation=args.freeze_rotation,
    )
    scene = make_scene(args.size, args.size, args.profile, args.pose_magnitude, args.texture_freq, args.seed)
    run = optimize(scene, cfg=TOY_LOSS_CONFIG, train_cfg=train_cfg)
    result = summarize(scene, run)

    out_dir = prepare_out_dir(args.out)
    if out_dir is not None:
        write_map(recovered_depth(scene, run.params), out_dir / "depth.pfm", "pfm-float")
        write_text(out_dir / "params.json", to_json(result))
        write_text(out_dir / "history.csv", _history_csv(run.history))

    summary = {
        "steps": args.steps,
        "initial_loss": run.history[0],
        "final_loss": run.history[-1],
        "interior_abs_rel": result.interior_abs_rel,
        "intrinsics": result.intrinsics,
        "gt_intrinsics": scene.gt_intrinsics.as_list(),
    }
    config = {
        "train": train_cfg.model_dump(mode="json"),
        "loss": TOY_LOSS_CONFIG.model_dump(by_alias=True),
        "scene": {
            "size": args.size,
            "profile": args.profile,
            "pose_magnitude": args.pose_magnitude,
            "texture_freq": args.texture_freq,
        },
    }
    return CommandOutput(
        stdout=json.dumps(summary, indent=2), config=config, inputs=[], out_dir=out_dir, seed=args.seed
    )
