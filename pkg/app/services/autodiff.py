"""
Gradient engine for the warp-and-loss pipeline

Gradients come from torch reverse-mode autograd over the fixed pipeline
(disparity squash, optional median flattening, backprojection, rigid
transform, projection, bilinear resampling, photometric and smoothness
losses). A central-difference harness checks them coordinate by coordinate
and skips coordinates that sit near a non-differentiable point.
"""
import math
from typing import List, NamedTuple, Optional, Protocol, Sequence, Tuple

import numpy as np
import torch

from app.core.exceptions import (
    BaseAppException,
    GradientCheckException,
    PreconditionException,
    ShapeMismatchException,
)
from app.core.logging import bind_run, logger
from app.models.camera import FlowGrid
from app.models.masks import InstanceMask
from app.models.params import GROUP_NAMES, ParamCoord, ParamGroups
from app.models.scene import SyntheticScene
from app.schemas.adjust import AdjustConfig
from app.schemas.gradcheck import CoordinateCheck, GradReport, GroupGradStats
from app.schemas.losses import LossConfig
from app.services.geometry import (
    SMALL_ANGLE,
    assemble_k,
    compose_transform,
    depth_to_disparity,
    disparity_to_depth,
    intrinsics_from_raw,
    raw_from_intrinsics,
    unnormalize,
    warp_image,
)
from app.services.losses import L1_DEAD_ZONE, LossTerms, compute_total_loss, photometric_error, ssim
from app.services.pyramid import downsample_to_scale, tensor_pyramid
from app.services.scene_synthesis import render_scene
from app.services.semantic_adjust import FlattenStep, apply_plan_tensor, median_flatten_plan

# Gradcheck skips a coordinate whose discrete pipeline state changes within this many steps h.
KINK_RADIUS = 10.0
# Step fractions tried in turn before a coordinate is flagged.
STEP_REFINEMENTS = (1.0, 0.1, 0.01)
REL_ERROR_FLOOR = 1e-8


class ScalarObjective(Protocol):
    """Anything finite_diff can difference: a scalar function of the parameter groups."""

    def loss(self, params: ParamGroups) -> float:
        ...


class _Forward(NamedTuple):
    terms: LossTerms
    disp_smooth: List[torch.Tensor]
    warped: List[List[torch.Tensor]]
    flows: List[List[FlowGrid]]
    plan: List[FlattenStep]


def _sign_with_dead_zone(x: torch.Tensor, dead_zone: float = L1_DEAD_ZONE) -> np.ndarray:
    values = x.detach().numpy()
    return np.where(np.abs(values) <= dead_zone, 0, np.sign(values)).astype(np.int64)


class ViewSynthesisObjective:
    """
    Total loss of a frame triplet as a function of the three parameter groups.

    Image pyramids of the target and the sources are built once. The
    disparity pyramid is rebuilt from the parameters on every evaluation by
    block averaging the full-resolution disparity.

    Args:
        scene: Target frame, source frames and the depth range
        cfg: Loss configuration
        instances: Instance masks for object-coherent disparity adjustment
        adjust: Adjustment settings; no adjustment when None
    """

    def __init__(
        self,
        scene: SyntheticScene,
        cfg: Optional[LossConfig] = None,
        instances: Optional[Sequence[InstanceMask]] = None,
        adjust: Optional[AdjustConfig] = None,
    ):
        self.scene = scene
        self.cfg = cfg or LossConfig()
        self.instances = list(instances if instances is not None else scene.instances)
        self.adjust = adjust
        self.target_levels = tensor_pyramid(scene.target.to_tensor(), self.cfg.num_levels)
        self.source_levels = [tensor_pyramid(frame.to_tensor(), self.cfg.num_levels) for frame in scene.sources]

    def _check(self, params: ParamGroups) -> None:
        expected = (self.scene.height, self.scene.width)
        if tuple(params.inv_depth.shape) != expected:
            raise ShapeMismatchException(
                f"inv_depth is {tuple(params.inv_depth.shape)}, scene is {expected}"
            )
        if params.pose.shape[0] != len(self.scene.sources):
            raise ShapeMismatchException(
                f"{params.pose.shape[0]} pose rows for {len(self.scene.sources)} source frames"
            )
        params.validate_ranges()

    def _plan(self, disp: torch.Tensor) -> List[FlattenStep]:
        if self.adjust is None or not self.instances:
            return []
        return median_flatten_plan(disp.detach().numpy(), self.instances, self.adjust)

    def _forward(self, params: ParamGroups) -> _Forward:
        self._check(params)
        width, height = self.scene.width, self.scene.height
        disp = torch.sigmoid(params.inv_depth)
        plan = self._plan(disp)
        adjusted = apply_plan_tensor(disp, plan) if plan else disp
        smooth_source = adjusted if self.adjust is not None and self.adjust.apply_to_smoothness else disp

        intrinsics = intrinsics_from_raw(params.intrinsics_raw)
        transforms = [compose_transform(row[:3], row[3:]) for row in params.pose]

        warped_per_scale: List[List[torch.Tensor]] = []
        flows_per_scale: List[List[FlowGrid]] = []
        disp_per_scale: List[torch.Tensor] = []
        for scale in self.cfg.scales:
            disp_warp = downsample_to_scale(adjusted.unsqueeze(0), scale)
            depth = disparity_to_depth(disp_warp, self.scene.min_depth, self.scene.max_depth)
            k = assemble_k(intrinsics, width, height, scale)
            warped, flows = [], []
            for levels, transform in zip(self.source_levels, transforms):
                image, flow = warp_image(levels[scale], depth, k, transform, self.cfg.padding)
                warped.append(image)
                flows.append(flow)
            warped_per_scale.append(warped)
            flows_per_scale.append(flows)
            disp_per_scale.append(downsample_to_scale(smooth_source.unsqueeze(0), scale))

        terms = compute_total_loss(self.target_levels, warped_per_scale, disp_per_scale, self.cfg)
        return _Forward(terms, disp_per_scale, warped_per_scale, flows_per_scale, plan)

    def loss(self, params: ParamGroups) -> float:
        """Total loss at ``params``."""
        with torch.no_grad():
            return float(self._forward(params).terms.total)

    def loss_and_gradients(self, params: ParamGroups) -> Tuple[float, ParamGroups]:
        """
        Total loss and its gradient with respect to every scalar of every group.

        Raises:
            PreconditionException: If a parameter is non-finite or a rotation angle reaches pi
            ShapeMismatchException: If the groups do not fit the scene
        """
        leaves = {name: params.group(name).detach().clone().requires_grad_(True) for name in GROUP_NAMES}
        total = self._forward(ParamGroups(**leaves)).terms.total
        total.backward()
        grads = {
            name: leaf.grad.detach().clone() if leaf.grad is not None else torch.zeros_like(leaf.detach())
            for name, leaf in leaves.items()
        }
        return float(total.detach()), ParamGroups(**grads)

    def kink_signature(self, params: ParamGroups) -> np.ndarray:
        """
        Discrete state of every non-smooth operation at ``params``.

        Covers bilinear cell indices and border clamping, projection validity,
        L1 signs, SSIM clamp activity, the min-reprojection choice, smoothness
        gradient signs, median indices and the small-angle rotation branch.
        Two parameter points with equal signatures lie on the same smooth piece.
        """
        parts: List[np.ndarray] = []
        with torch.no_grad():
            forward = self._forward(params)
            for position, scale in enumerate(self.cfg.scales):
                target = self.target_levels[scale]
                height, width = target.shape[-2:]
                errors = []
                for image, flow in zip(forward.warped[position], forward.flows[position]):
                    pixels = unnormalize(flow, width, height).numpy()
                    parts.append(np.floor(pixels).astype(np.int64).ravel())
                    upper = np.array([width - 1, height - 1], dtype=np.float64)
                    parts.append((np.sign(pixels - np.clip(pixels, 0.0, upper))).astype(np.int64).ravel())
                    parts.append(flow.valid.numpy().astype(np.int64).ravel())
                    parts.append(_sign_with_dead_zone(target - image).ravel())
                    dissimilarity = (1.0 - ssim(target, image, self.cfg.ssim_c1, self.cfg.ssim_c2)).numpy()
                    parts.append(((dissimilarity > 2.0).astype(np.int64) - (dissimilarity < 0.0)).ravel())
                    errors.append(photometric_error(target, image, self.cfg))
                parts.append(torch.argmin(torch.stack(errors), dim=0).numpy().astype(np.int64).ravel())

                disp = forward.disp_smooth[position]
                parts.append(_sign_with_dead_zone(disp[:, :, 1:] - disp[:, :, :-1], 0.0).ravel())
                parts.append(_sign_with_dead_zone(disp[:, 1:, :] - disp[:, :-1, :], 0.0).ravel())

            parts.append(np.array([index for _, index in forward.plan], dtype=np.int64))
            angles = params.pose.detach()[:, :3].norm(dim=1).numpy()
            parts.append((angles < SMALL_ANGLE).astype(np.int64))
        return np.concatenate(parts)


# ==================== CONVENIENCE FUNCTIONS ====================


def loss_and_gradients(
    scene: SyntheticScene,
    params: ParamGroups,
    cfg: Optional[LossConfig] = None,
    adjust: Optional[AdjustConfig] = None,
) -> Tuple[float, ParamGroups]:
    """One-shot loss and gradients; build a ViewSynthesisObjective to evaluate repeatedly."""
    return ViewSynthesisObjective(scene, cfg, adjust=adjust).loss_and_gradients(params)


def finite_diff(objective: ScalarObjective, params: ParamGroups, coord: ParamCoord, h: float) -> float:
    """Central difference (L(theta + h) - L(theta - h)) / 2h on one coordinate."""
    if h <= 0:
        raise PreconditionException(f"Step h must be positive, got {h}")
    forward = objective.loss(params.with_offset(coord, h))
    backward = objective.loss(params.with_offset(coord, -h))
    return (forward - backward) / (2.0 * h)


def relative_error(analytic: float, numeric: float) -> float:
    return abs(analytic - numeric) / max(abs(analytic), abs(numeric), REL_ERROR_FLOOR)


def _smooth_step(
    objective: ViewSynthesisObjective,
    params: ParamGroups,
    coord: ParamCoord,
    h: float,
    base_signature: np.ndarray,
) -> Optional[float]:
    """Largest refined step whose +/- KINK_RADIUS neighbourhood keeps the base signature."""
    for fraction in STEP_REFINEMENTS:
        step = h * fraction
        if all(
            np.array_equal(
                objective.kink_signature(params.with_offset(coord, sign * KINK_RADIUS * step)), base_signature
            )
            for sign in (1.0, -1.0)
        ):
            return step
    return None


def gradcheck(
    objective: ViewSynthesisObjective,
    params: ParamGroups,
    sample_count: int = 200,
    h: float = 1e-4,
    tol: float = 1e-4,
    seed: int = 0,
) -> GradReport:
    """
    Compare analytic gradients against central differences on sampled coordinates.

    Up to ``sample_count`` coordinates are drawn per group without replacement
    from PCG64(seed). Pose and intrinsics coordinates move every pixel's flow,
    so a step of h often carries some pixel across a bilinear cell edge; the
    step is then refined through STEP_REFINEMENTS. Each coordinate records
    the step it was checked with. A coordinate is flagged,
    and left out of the error statistics, when the kink signature at
    theta +/- 10 * step differs from the one at theta for every refinement.

    Args:
        objective: Pipeline to check
        params: Evaluation point
        sample_count: Coordinates per group
        h: Finite-difference step
        tol: Pass threshold on the maximum relative error
        seed: Sampling seed

    Returns:
        GradReport; ``passed`` iff the maximum relative error is below ``tol``

    Raises:
        GradientCheckException: If every sampled coordinate was flagged
    """
    if sample_count < 1:
        raise PreconditionException(f"sample_count must be at least 1, got {sample_count}")
    if h <= 0 or tol <= 0:
        raise PreconditionException("h and tol must be positive")

    _, grads = objective.loss_and_gradients(params)
    base_signature = objective.kink_signature(params)
    rng = np.random.Generator(np.random.PCG64(seed))

    stats: List[GroupGradStats] = []
    all_errors: List[float] = []
    for name in GROUP_NAMES:
        size = params.size(name)
        chosen = rng.choice(size, size=min(sample_count, size), replace=False)
        analytic_flat = grads.group(name).reshape(-1)
        errors: List[float] = []
        coordinates: List[CoordinateCheck] = []
        flagged = 0
        with bind_run(group=name):
            for index in chosen:
                coord = ParamCoord(group=name, index=int(index))
                step = _smooth_step(objective, params, coord, h, base_signature)
                if step is None:
                    flagged += 1
                    coordinates.append(CoordinateCheck(index=coord.index))
                    logger.debug("Coordinate flagged near a kink", extra={"context": {"index": coord.index}})
                    continue
                if step < h:
                    logger.debug("Refined step", extra={"context": {"index": coord.index, "step": step}})
                numeric = finite_diff(objective, params, coord, step)
                error = relative_error(float(analytic_flat[coord.index]), numeric)
                errors.append(error)
                coordinates.append(CoordinateCheck(index=coord.index, step=step, rel_error=error))

        stats.append(GroupGradStats(
            group=name,
            sampled=len(chosen),
            checked=len(errors),
            flagged=flagged,
            max_rel_error=max(errors, default=0.0),
            mean_rel_error=float(np.mean(errors)) if errors else 0.0,
            refined=sum(1 for item in coordinates if item.step is not None and item.step < h),
            coordinates=coordinates,
        ))
        all_errors.extend(errors)
        logger.info(
            "Checked parameter group",
            extra={"context": {"group": name, "checked": len(errors), "flagged": flagged}},
        )

    if not all_errors:
        raise GradientCheckException("Every sampled coordinate lies near a non-differentiable point")
    max_error = max(all_errors)
    return GradReport(
        groups=stats,
        h=h,
        tol=tol,
        seed=seed,
        checked=len(all_errors),
        max_rel_error=max_error,
        passed=max_error < tol,
    )


# ==================== BUILT-IN CHECK PROBLEM ====================


def _logit(p: torch.Tensor) -> torch.Tensor:
    return torch.log(p) - torch.log1p(-p)


def gradcheck_problem(
    width: int = 8, height: int = 8, seed: int = 0
) -> Tuple[ViewSynthesisObjective, ParamGroups]:
    """
    A small slanted-plane scene and a generic evaluation point near its ground truth.

    Every parameter is perturbed away from ground truth so no pose component
    or depth sits at a special value, and the source frames carry a constant
    photometric offset so L1 differences keep one sign.
    """
    if min(width, height) < 4 or width & (width - 1) or height & (height - 1):
        raise PreconditionException(f"Check scenes need power-of-two dims of at least 4, got {width}x{height}")
    scene = render_scene(
        width,
        height,
        depth_profile="slanted-plane",
        pose_magnitude=0.5,
        texture_freq=2.0,
        seed=seed,
        photometric_offset=0.1,
    )
    levels = min(4, int(math.log2(min(width, height))))
    cfg = LossConfig(scales=list(range(levels)))

    rng = np.random.Generator(np.random.PCG64(seed))
    gt_disp = depth_to_disparity(scene.gt_depth.to_tensor()[0], scene.min_depth, scene.max_depth)
    inv_depth = _logit(gt_disp) + torch.from_numpy(rng.normal(0.0, 0.05, size=(height, width)))
    pose = torch.tensor(scene.gt_pose_vectors, dtype=torch.float64)
    pose = pose + torch.from_numpy(rng.normal(0.0, 2e-3, size=tuple(pose.shape)))
    intrinsics_raw = raw_from_intrinsics(scene.gt_intrinsics) + torch.from_numpy(rng.normal(0.0, 1e-2, size=4))
    params = ParamGroups(inv_depth=inv_depth, pose=pose, intrinsics_raw=intrinsics_raw)
    return ViewSynthesisObjective(scene, cfg), params


def run_gradcheck(
    width: int = 8,
    height: int = 8,
    seed: int = 0,
    sample_count: int = 200,
    h: float = 1e-4,
    tol: float = 1e-4,
) -> GradReport:
    """Build the check problem for ``seed`` and run gradcheck on it."""
    try:
        objective, params = gradcheck_problem(width, height, seed)
        return gradcheck(objective, params, sample_count, h, tol, seed)
    except BaseAppException:
        raise
    except Exception as e:
        raise GradientCheckException(f"Gradient check failed to run: {e}")
