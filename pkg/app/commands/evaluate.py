"""
eval: depth metrics for directories of PFM maps paired by file name
"""
import argparse
from pathlib import Path
from typing import List

from app.commands.common import CommandOutput, existing_dir, prepare_out_dir, to_json, write_text
from app.core.exceptions import NotFoundException, PreconditionException
from app.schemas.evaluation import DepthReport, EvalConfig, NamedMetrics
from app.services.depth_eval import aggregate, compute_metrics, format_report
from app.services.reference_results import REFERENCE_ROWS, reference_row
from app.utils.image_io import read_image


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("eval", help="Evaluate predicted depth against ground truth")
    parser.add_argument("--gt", required=True, help="Directory of ground-truth PFM maps")
    parser.add_argument("--pred", required=True, help="Directory of predicted PFM maps with the same names")
    parser.add_argument("--mask", help="Directory of PGM validity masks named <stem>.pgm")
    parser.add_argument("--min-depth", type=float, default=1e-3)
    parser.add_argument("--max-depth", type=float, default=80.0)
    parser.add_argument("--median-scaling", action="store_true")
    parser.add_argument("--log-base", choices=["natural", "ten"], default="natural")
    parser.add_argument(
        "--compare-to", action="append", default=[], choices=sorted(REFERENCE_ROWS),
        help="Append a published reference row (repeatable)",
    )
    parser.add_argument("--format", choices=["json", "table"], default="json")
    parser.add_argument("--out", help="Directory for report.json")
    parser.set_defaults(handler=handle)


def _pairs(gt_dir: Path, pred_dir: Path) -> List[Path]:
    names = sorted(path.name for path in gt_dir.glob("*.pfm"))
    if not names:
        raise PreconditionException(f"No .pfm files in '{gt_dir}'")
    for name in names:
        if not (pred_dir / name).is_file():
            raise NotFoundException("Prediction", str(pred_dir / name))
    return [Path(name) for name in names]


def handle(args: argparse.Namespace) -> CommandOutput:
    cfg = EvalConfig(
        min_depth=args.min_depth,
        max_depth=args.max_depth,
        median_scaling=args.median_scaling,
        log_base=args.log_base,
    )
    gt_dir = existing_dir(args.gt)
    pred_dir = existing_dir(args.pred)
    mask_dir = existing_dir(args.mask) if args.mask else None

    rows: List[NamedMetrics] = []
    inputs: List[Path] = []
    for name in _pairs(gt_dir, pred_dir):
        gt = read_image(gt_dir / name, kind="pfm-float")
        pred = read_image(pred_dir / name, kind="pfm-float")
        inputs += [gt_dir / name, pred_dir / name]
        mask = None
        if mask_dir is not None:
            mask_path = mask_dir / name.with_suffix(".pgm")
            if not mask_path.is_file():
                raise NotFoundException("Mask", str(mask_path))
            mask = read_image(mask_path, kind="pgm-gray")
            inputs.append(mask_path)
        rows.append(NamedMetrics(name=name.stem, metrics=compute_metrics(gt, pred, mask, cfg)))

    report = DepthReport(
        config=cfg,
        rows=rows,
        aggregate=aggregate([row.metrics for row in rows]),
        reference=[reference_row(name) for name in args.compare_to],
    )
    if args.format == "table":
        table_rows = [*rows, NamedMetrics(name="mean", metrics=report.aggregate), *report.reference]
        stdout, _ = format_report(table_rows)
    else:
        stdout = to_json(report)

    out_dir = prepare_out_dir(args.out)
    if out_dir is not None:
        write_text(out_dir / "report.json", to_json(report))
    return CommandOutput(stdout=stdout, config=cfg.model_dump(), inputs=inputs, out_dir=out_dir)
