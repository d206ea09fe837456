"""
Depth evaluation: the seven standard monocular-depth metrics
"""
from typing import List, Optional, Sequence, Tuple

import numpy as np
from pydantic import TypeAdapter

from app.core.exceptions import PreconditionException, ShapeMismatchException
from app.models.grid import Grid
from app.schemas.evaluation import METRIC_COLUMNS, DepthMetrics, EvalConfig, NamedMetrics

DELTA_THRESHOLD = 1.25
UNNAMED = "(unnamed)"

_ROWS_ADAPTER = TypeAdapter(List[NamedMetrics])


def _single_channel(grid: Grid, name: str) -> np.ndarray:
    if grid.channels != 1:
        raise ShapeMismatchException(f"{name} must have 1 channel, got {grid.channels}")
    return grid.plane(0)


def compute_metrics(
    gt: Grid,
    pred: Grid,
    valid_mask: Optional[Grid] = None,
    cfg: Optional[EvalConfig] = None,
) -> DepthMetrics:
    """
    Evaluate a predicted depth map against ground truth.

    Pixels count when the mask is set and gt is finite and positive. With
    median scaling pred is multiplied by median(gt) / median(pred) over those
    pixels; pred is then clamped to [min_depth, max_depth].

    Args:
        gt: Ground-truth depth
        pred: Predicted depth
        valid_mask: Binary mask; every pixel when None
        cfg: Clamp bounds, scaling and log base

    Returns:
        DepthMetrics

    Raises:
        ShapeMismatchException: If the maps differ in size
        PreconditionException: If no pixel is valid
    """
    cfg = cfg or EvalConfig()
    gt_values = _single_channel(gt, "gt")
    pred_values = _single_channel(pred, "pred")
    if not gt.same_dims(pred):
        raise ShapeMismatchException(f"gt is {gt.width}x{gt.height}, pred is {pred.width}x{pred.height}")
    mask = np.isfinite(gt_values) & (gt_values > 0)
    if valid_mask is not None:
        if not valid_mask.same_dims(gt):
            raise ShapeMismatchException("Valid mask dims differ from gt")
        mask &= _single_channel(valid_mask, "valid_mask") > 0.5
    if not mask.any():
        raise PreconditionException("No valid pixels with positive ground truth")

    truth = gt_values[mask]
    estimate = pred_values[mask]
    if cfg.median_scaling:
        pred_median = np.median(estimate)
        if pred_median <= 0:
            raise PreconditionException("Median of predicted depth must be positive for median scaling")
        estimate = estimate * (np.median(truth) / pred_median)
    estimate = np.clip(estimate, cfg.min_depth, cfg.max_depth)

    delta = np.maximum(truth / estimate, estimate / truth)
    log = np.log if cfg.log_base == "natural" else np.log10
    diff = truth - estimate
    return DepthMetrics(
        a1=float(np.mean(delta < DELTA_THRESHOLD)),
        a2=float(np.mean(delta < DELTA_THRESHOLD ** 2)),
        a3=float(np.mean(delta < DELTA_THRESHOLD ** 3)),
        abs_rel=float(np.mean(np.abs(diff) / truth)),
        sq_rel=float(np.mean(diff ** 2 / truth)),
        rms=float(np.sqrt(np.mean(diff ** 2))),
        log_rms=float(np.sqrt(np.mean((log(truth) - log(estimate)) ** 2))),
    )


def aggregate(per_image: Sequence[DepthMetrics]) -> DepthMetrics:
    """Unweighted mean of each metric, summed in input order."""
    if not per_image:
        raise PreconditionException("Cannot aggregate an empty list of metrics")
    count = len(per_image)
    means = {}
    for metric in METRIC_COLUMNS:
        total = 0.0
        for item in per_image:
            total += item.value(metric)
        means[metric] = total / count
    return DepthMetrics(**means)


def format_report(rows: Sequence[NamedMetrics]) -> Tuple[str, str]:
    """
    Render rows as a results table and as JSON.

    The table prints three decimals per column; the JSON carries full
    precision. Rows without a name are shown as "(unnamed)".

    Returns:
        (text table, JSON document)
    """
    if not rows:
        raise PreconditionException("Report needs at least one row")
    named = [NamedMetrics(name=row.name or UNNAMED, metrics=row.metrics) for row in rows]
    name_width = max(len("name"), *(len(row.name) for row in named))
    column_width = max(len(column) for column in METRIC_COLUMNS) + 2

    header = "name".ljust(name_width) + "".join(column.rjust(column_width) for column in METRIC_COLUMNS)
    lines = [header, "-" * len(header)]
    for row in named:
        cells = "".join(f"{row.metrics.value(column):.3f}".rjust(column_width) for column in METRIC_COLUMNS)
        lines.append(row.name.ljust(name_width) + cells)
    text = "\n".join(lines)
    return text, _ROWS_ADAPTER.dump_json(named, indent=2).decode()
