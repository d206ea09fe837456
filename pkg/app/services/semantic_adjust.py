"""
Semantic map merging and object-coherent disparity adjustment
"""
from typing import List, Optional, Sequence, Tuple

import numpy as np
import torch

from app.core.exceptions import PreconditionException, ShapeMismatchException
from app.core.logging import logger
from app.models.grid import Grid
from app.models.masks import InstanceMask
from app.schemas.adjust import AdjustConfig

# One adjustment: boolean mask over the flattened map and the flat index of its median pixel.
FlattenStep = Tuple[np.ndarray, int]


def _check_dims(instances: Sequence[InstanceMask], height: int, width: int) -> None:
    for position, instance in enumerate(instances):
        if (instance.mask.height, instance.mask.width) != (height, width):
            raise ShapeMismatchException(
                f"Instance {position} mask is {instance.mask.width}x{instance.mask.height}, "
                f"expected {width}x{height}"
            )


def qualifying_instances(instances: Sequence[InstanceMask], cfg: AdjustConfig) -> List[InstanceMask]:
    """Instances with confidence >= threshold and an allow-listed class, in input order."""
    return [item for item in instances if cfg.qualifies(item.confidence, item.class_id)]


def merge_masks(
    instances: Sequence[InstanceMask],
    cfg: AdjustConfig,
    height: Optional[int] = None,
    width: Optional[int] = None,
) -> Grid:
    """
    Union of every qualifying instance mask.

    Args:
        instances: Detected instances
        cfg: Threshold and class allowlist
        height: Map height, required when ``instances`` is empty
        width: Map width, required when ``instances`` is empty

    Returns:
        Single-channel binary grid
    """
    if instances:
        height = instances[0].mask.height if height is None else height
        width = instances[0].mask.width if width is None else width
    if height is None or width is None:
        raise PreconditionException("Map dims are required when there are no instances")
    _check_dims(instances, height, width)

    merged = np.zeros((height, width), dtype=bool)
    for instance in qualifying_instances(instances, cfg):
        merged |= instance.as_bool()
    return Grid(data=merged.astype(np.float64))


def lower_median_index(values: np.ndarray, indices: np.ndarray) -> int:
    """
    Flat index of the lower median of ``values[indices]``.

    Ties keep input order (stable sort), so the choice is deterministic.
    """
    order = np.argsort(values[indices], kind="stable")
    return int(indices[order[(len(indices) - 1) // 2]])


def median_flatten_plan(disp: np.ndarray, instances: Sequence[InstanceMask], cfg: AdjustConfig) -> List[FlattenStep]:
    """
    Per qualifying instance, the pixels it owns and the flat index of their median.

    Overlaps are resolved first: a pixel belongs to the last qualifying instance
    covering it, so the owned regions are disjoint and a second pass is a fixed
    point. Medians are taken over the original (unadjusted) values of the owned
    region. Instances that own no pixels are skipped.
    """
    height, width = disp.shape
    _check_dims(instances, height, width)
    if cfg.strategy == "none":
        return []

    flat = disp.reshape(-1)
    claimed = np.zeros(flat.shape, dtype=bool)
    plan: List[FlattenStep] = []
    for instance in reversed(qualifying_instances(instances, cfg)):
        mask = instance.as_bool().reshape(-1) & ~claimed
        claimed |= mask
        indices = np.flatnonzero(mask)
        if indices.size == 0:
            logger.debug("Skipping instance that owns no pixels", extra={"context": {"class_id": instance.class_id}})
            continue
        plan.append((mask, lower_median_index(flat, indices)))
    plan.reverse()
    return plan


def apply_plan(disp: np.ndarray, plan: Sequence[FlattenStep]) -> np.ndarray:
    """Apply a flatten plan; its regions are disjoint."""
    flat = disp.reshape(-1)
    adjusted = flat.copy()
    for mask, median_index in plan:
        adjusted[mask] = flat[median_index]
    return adjusted.reshape(disp.shape)


def apply_plan_tensor(disp: torch.Tensor, plan: Sequence[FlattenStep]) -> torch.Tensor:
    """
    Differentiable apply_plan for a (height, width) tensor.

    Each flattened pixel takes its value from the median pixel, so the
    gradient of the whole region lands on that one pixel.
    """
    flat = disp.reshape(-1)
    adjusted = flat
    for mask, median_index in plan:
        region = torch.from_numpy(mask)
        adjusted = torch.where(region, flat[median_index], adjusted)
    return adjusted.reshape(disp.shape)


def adjust_disparity(disp: Grid, instances: Sequence[InstanceMask], cfg: AdjustConfig) -> Grid:
    """
    Flatten each qualifying instance's disparity to its median.

    Pixels outside every qualifying mask are untouched. Where masks overlap the
    later instance owns the pixel, and each median is taken over owned pixels. Strategy "none" returns the input unchanged.
    """
    if disp.channels != 1:
        raise PreconditionException(f"Disparity must have 1 channel, got {disp.channels}")
    plane = disp.plane(0)
    plan = median_flatten_plan(plane, instances, cfg)
    if not plan:
        return disp
    logger.info("Adjusted disparity", extra={"context": {"instances": len(plan)}})
    return Grid(data=apply_plan(plane, plan))
