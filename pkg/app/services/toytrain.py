"""
Network-free training loop: AdamW directly on depth, pose and intrinsics of one scene
"""
import math
from typing import Iterable, List, NamedTuple, Optional

import numpy as np
import torch

from app.core.exceptions import DivergenceException, PreconditionException
from app.core.logging import bind_run, logger
from app.models.camera import BASELINE_INTRINSICS
from app.models.grid import DTYPE, Grid
from app.models.params import FREE_GROUP_ALIASES, GROUP_NAMES, LrSchedule, OptimState, ParamGroups
from app.models.scene import SyntheticScene
from app.schemas.losses import LossConfig
from app.schemas.training import AdamWHyper, TrainConfig, TrainResult
from app.services.autodiff import ViewSynthesisObjective
from app.services.geometry import (
    assemble_k,
    compose_transform,
    depth_to_disparity,
    disparity_to_depth,
    intrinsics_from_raw,
    raw_from_intrinsics,
)

# Full resolution only, 2-pixel eroded interior, clamp-to-edge sampling.
TOY_LOSS_CONFIG = LossConfig(scales=[0], border=2, padding="border")
INTERIOR_BORDER = 2


class OptimizationRun(NamedTuple):
    params: ParamGroups
    history: List[float]


# ==================== SCHEDULES ====================


def cosine_lr(step: int, total_steps: int, lr0: float, lr_min: float = 0.0) -> float:
    """
    lr_min + (lr0 - lr_min) * (1 + cos(pi * step / total_steps)) / 2.

    A zero-length schedule stays at lr0.
    """
    if not 0 <= step <= total_steps:
        raise PreconditionException(f"step {step} outside [0, {total_steps}]")
    if total_steps == 0:
        return lr0
    return lr_min + (lr0 - lr_min) * (1.0 + math.cos(math.pi * step / total_steps)) / 2.0


def scheduled_lr(schedule: LrSchedule, step: int) -> float:
    if schedule.name == "constant":
        return schedule.lr0
    return cosine_lr(min(step, schedule.total_steps), schedule.total_steps, schedule.lr0, schedule.lr_min)


# ==================== ADAMW ====================


def resolve_free(free: Iterable[str]) -> frozenset:
    """Map user-facing names (depth, pose, intrinsics) or group names to group names."""
    groups = set()
    for name in free:
        if name in FREE_GROUP_ALIASES:
            groups.add(FREE_GROUP_ALIASES[name])
        elif name in GROUP_NAMES:
            groups.add(name)
        else:
            raise PreconditionException(
                f"Unknown parameter group '{name}', expected one of {sorted(FREE_GROUP_ALIASES)}"
            )
    return frozenset(groups)


def adamw_step(
    state: OptimState,
    grads: ParamGroups,
    hyper: AdamWHyper,
    lr: Optional[float] = None,
    free: Optional[Iterable[str]] = None,
    freeze_rotation: bool = False,
) -> OptimState:
    """
    One AdamW update: decoupled decay theta -= lr * wd * theta, then the bias-corrected Adam step.

    Args:
        state: Current parameters and moments
        grads: Gradients shaped like the parameters
        hyper: Betas, epsilon and weight decay
        lr: Learning rate; defaults to the state's schedule at its current step
        free: Groups to update; all groups when None. Frozen groups keep
            their values and moments.
        freeze_rotation: Leave the axis-angle columns of the pose untouched

    Raises:
        ShapeMismatchException: If a gradient group's shape differs from its parameter group
    """
    grads.check_compatible(state.params)
    if lr is None:
        lr = scheduled_lr(state.schedule, state.step)
    groups = resolve_free(free) if free is not None else frozenset(GROUP_NAMES)
    step = state.step + 1
    bias1 = 1.0 - hyper.beta1 ** step
    bias2 = 1.0 - hyper.beta2 ** step

    values, first, second = {}, {}, {}
    for name in GROUP_NAMES:
        theta = state.params.group(name).detach()
        m = state.exp_avg.group(name)
        v = state.exp_avg_sq.group(name)
        if name not in groups:
            values[name], first[name], second[name] = theta.clone(), m.clone(), v.clone()
            continue

        g = grads.group(name).detach()
        m = hyper.beta1 * m + (1.0 - hyper.beta1) * g
        v = hyper.beta2 * v + (1.0 - hyper.beta2) * g * g
        decayed = theta * (1.0 - lr * hyper.weight_decay)
        updated = decayed - lr * (m / bias1) / (torch.sqrt(v / bias2) + hyper.eps)
        if name == "pose" and freeze_rotation:
            updated = torch.cat([theta[:, :3], updated[:, 3:]], dim=1)
        values[name], first[name], second[name] = updated, m, v

    return OptimState(
        params=ParamGroups(**values),
        exp_avg=ParamGroups(**first),
        exp_avg_sq=ParamGroups(**second),
        step=step,
        schedule=state.schedule,
    )


# ==================== INITIALIZATION ====================


def _logit(p: torch.Tensor) -> torch.Tensor:
    return torch.log(p) - torch.log1p(-p)


def ground_truth_params(scene: SyntheticScene) -> ParamGroups:
    """Parameters that reproduce the scene's ground truth exactly."""
    disparity = depth_to_disparity(scene.gt_depth.to_tensor()[0], scene.min_depth, scene.max_depth)
    return ParamGroups(
        inv_depth=_logit(disparity),
        pose=torch.tensor(scene.gt_pose_vectors, dtype=DTYPE),
        intrinsics_raw=raw_from_intrinsics(scene.gt_intrinsics),
    )


def initial_params(scene: SyntheticScene, free: Iterable[str], initial_disparity: float = 0.3) -> ParamGroups:
    """
    Frozen groups at ground truth; free groups at the warm start.

    Warm starts: constant disparity ``initial_disparity``, zero poses and the
    fixed baseline intrinsics.
    """
    groups = resolve_free(free)
    truth = ground_truth_params(scene)
    start = {}
    if "inv_depth" in groups:
        start["inv_depth"] = _logit(torch.full((scene.height, scene.width), initial_disparity, dtype=DTYPE))
    if "pose" in groups:
        start["pose"] = torch.zeros_like(truth.pose)
    if "intrinsics_raw" in groups:
        start["intrinsics_raw"] = raw_from_intrinsics(BASELINE_INTRINSICS)
    return truth.replace(**start)


# ==================== EVALUATION ====================


def recovered_depth(scene: SyntheticScene, params: ParamGroups) -> Grid:
    disparity = torch.sigmoid(params.inv_depth.detach())
    return Grid.from_tensor(disparity_to_depth(disparity, scene.min_depth, scene.max_depth))


def interior_abs_rel(scene: SyntheticScene, params: ParamGroups, border: int = INTERIOR_BORDER) -> float:
    """Mean |gt - pred| / gt over the image with ``border`` pixels removed at each edge."""
    gt = scene.gt_depth.plane(0)
    pred = recovered_depth(scene, params).plane(0)
    height, width = gt.shape
    if 2 * border >= min(height, width):
        raise PreconditionException(f"Border {border} leaves no interior in {width}x{height}")
    inner = (slice(border, height - border), slice(border, width - border))
    return float(np.mean(np.abs(gt[inner] - pred[inner]) / gt[inner]))


def recovered_kt(params: ParamGroups, width: int, height: int) -> List[np.ndarray]:
    """K t per source frame for the recovered intrinsics and translations."""
    k = assemble_k(intrinsics_from_raw(params.intrinsics_raw.detach()), width, height).numpy()
    return [k @ row[3:].numpy() for row in params.pose.detach()]


# ==================== OPTIMIZATION ====================


def optimize(
    scene: SyntheticScene,
    free: Optional[Iterable[str]] = None,
    cfg: Optional[LossConfig] = None,
    train_cfg: Optional[TrainConfig] = None,
) -> OptimizationRun:
    """
    Minimize the view-synthesis loss over the free groups with AdamW.

    Args:
        scene: Frame triplet with ground truth for the frozen groups
        free: Groups to optimize; defaults to ``train_cfg.free``
        cfg: Loss configuration; defaults to TOY_LOSS_CONFIG
        train_cfg: Steps, schedule and optimizer hyper-parameters

    Returns:
        Final parameters and the loss history (steps + 1 entries, the first
        at the initialization)

    Raises:
        DivergenceException: If the loss becomes non-finite or an update leaves
            the parameters non-finite or a rotation at or past pi
    """
    train_cfg = train_cfg or TrainConfig()
    cfg = cfg or TOY_LOSS_CONFIG
    free_groups = resolve_free(free if free is not None else train_cfg.free)

    objective = ViewSynthesisObjective(scene, cfg)
    schedule = LrSchedule(
        name=train_cfg.schedule,
        lr0=train_cfg.hyper.lr,
        lr_min=train_cfg.lr_min,
        total_steps=train_cfg.steps,
    )
    state = OptimState.initial(initial_params(scene, free_groups, train_cfg.initial_disparity), schedule)
    history: List[float] = []

    with bind_run(scene=f"{scene.depth_profile} {scene.width}x{scene.height}"):
        logger.info(
            "Starting optimization",
            extra={"context": {"free": sorted(free_groups), "steps": train_cfg.steps, "lr": train_cfg.hyper.lr}},
        )
        for step in range(train_cfg.steps + 1):
            loss, grads = objective.loss_and_gradients(state.params)
            if not math.isfinite(loss):
                raise DivergenceException(step)
            history.append(loss)
            if step % train_cfg.log_every == 0:
                logger.info("Optimization progress", extra={"context": {"step": step, "loss": loss}})
            if step == train_cfg.steps:
                break
            state = adamw_step(
                state, grads, train_cfg.hyper, free=free_groups, freeze_rotation=train_cfg.freeze_rotation
            )
            try:
                state.params.validate_ranges()
            except PreconditionException as e:
                raise DivergenceException(step + 1, detail=e.detail) from e

        logger.info(
            "Optimization finished",
            extra={"context": {"initial_loss": history[0], "final_loss": history[-1]}},
        )
    return OptimizationRun(params=state.params, history=history)


def summarize(scene: SyntheticScene, run: OptimizationRun) -> TrainResult:
    """Serializable view of a finished run."""
    params = run.params
    intrinsics = intrinsics_from_raw(params.intrinsics_raw.detach())
    poses = [compose_transform(row[:3], row[3:]).to_list() for row in params.pose.detach()]
    return TrainResult(
        params=params.to_dict(),
        history=run.history,
        intrinsics=intrinsics.tolist(),
        poses=poses,
        interior_abs_rel=interior_abs_rel(scene, params),
    )
