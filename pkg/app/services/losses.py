"""
Photometric and smoothness losses

Tensor layout is (channels, height, width). Per-pixel maps are (height, width).
Every function here is differentiable with torch autograd.
"""
import math
from typing import List, NamedTuple, Optional, Sequence, Tuple

import torch
import torch.nn.functional as F

from app.core.exceptions import PreconditionException, ShapeMismatchException
from app.core.logging import bind_run, logger
from app.models.grid import DTYPE, Grid, Pyramid
from app.schemas.losses import LossBreakdown, LossConfig, ScaleLoss

# Absolute differences at or below this count as zero (no gradient).
L1_DEAD_ZONE = 1e-12


def _check_same_shape(a: torch.Tensor, b: torch.Tensor) -> None:
    if a.shape != b.shape:
        raise ShapeMismatchException(f"Shapes differ: {tuple(a.shape)} vs {tuple(b.shape)}")


def robust_abs(x: torch.Tensor) -> torch.Tensor:
    """|x| with a dead zone: exactly 0, with zero gradient, where |x| <= L1_DEAD_ZONE."""
    magnitude = x.abs()
    return torch.where(magnitude <= L1_DEAD_ZONE, torch.zeros_like(magnitude), magnitude)


def local_mean(x: torch.Tensor) -> torch.Tensor:
    """
    3x3 box mean with reflect padding.

    Reflected taps reuse interior pixels, so in the backward pass an edge-adjacent
    pixel collects the gradient of both its own tap and its mirror. Maps with a
    side of 1 pixel have nothing to reflect and are replicate-padded instead.
    """
    mode = "reflect" if min(x.shape[-2:]) >= 2 else "replicate"
    padded = F.pad(x.unsqueeze(0), (1, 1, 1, 1), mode=mode)
    return F.avg_pool2d(padded, kernel_size=3, stride=1)[0]


def ssim(a: torch.Tensor, b: torch.Tensor, c1: float = 1e-4, c2: float = 9e-4) -> torch.Tensor:
    """
    Per-pixel SSIM from 3x3 reflect-padded means, averaged over channels.

    Returns:
        (height, width) map
    """
    _check_same_shape(a, b)
    mu_a = local_mean(a)
    mu_b = local_mean(b)
    sigma_a = local_mean(a * a) - mu_a * mu_a
    sigma_b = local_mean(b * b) - mu_b * mu_b
    sigma_ab = local_mean(a * b) - mu_a * mu_b

    numerator = (2 * mu_a * mu_b + c1) * (2 * sigma_ab + c2)
    denominator = (mu_a * mu_a + mu_b * mu_b + c1) * (sigma_a + sigma_b + c2)
    return (numerator / denominator).mean(dim=0)


def photometric_error(a: torch.Tensor, b: torch.Tensor, cfg: LossConfig) -> torch.Tensor:
    """
    pe = alpha/2 * clamp(1 - SSIM, 0, 2) + (1 - alpha) * mean_c |a - b|.

    Returns:
        (height, width) map
    """
    _check_same_shape(a, b)
    structural = torch.clamp(1.0 - ssim(a, b, cfg.ssim_c1, cfg.ssim_c2), 0.0, 2.0)
    absolute = robust_abs(a - b).mean(dim=0)
    return cfg.alpha / 2.0 * structural + (1.0 - cfg.alpha) * absolute


def _masked_mean(values: torch.Tensor, valid: Optional[torch.Tensor]) -> torch.Tensor:
    if valid is None:
        return values.mean()
    if not valid.any():
        raise PreconditionException("Loss region is empty")
    return values[valid].mean()


def min_reprojection_loss(
    target: torch.Tensor,
    warped: Sequence[torch.Tensor],
    cfg: LossConfig,
    valid: Optional[torch.Tensor] = None,
) -> Tuple[torch.Tensor, torch.Tensor]:
    """
    Per-pixel minimum of pe(target, candidate) over candidates, then the spatial mean.

    Ties go to the first candidate, which is also where the gradient flows.

    Args:
        target: Target image
        warped: Candidate reconstructions of the target
        cfg: Loss configuration
        valid: Optional boolean (height, width) region the mean is taken over

    Returns:
        (scalar loss, min-error map)
    """
    if len(warped) == 0:
        raise PreconditionException("At least one warped candidate is required")
    for candidate in warped:
        _check_same_shape(target, candidate)

    maps = torch.stack([photometric_error(target, candidate, cfg) for candidate in warped])
    choice = torch.argmin(maps, dim=0, keepdim=True)
    min_map = maps.gather(0, choice)[0]
    return _masked_mean(min_map, valid), min_map


def _image_gradients(x: torch.Tensor) -> Tuple[torch.Tensor, torch.Tensor]:
    return x[:, :, 1:] - x[:, :, :-1], x[:, 1:, :] - x[:, :-1, :]


def smoothness_loss(disp: torch.Tensor, image: torch.Tensor) -> torch.Tensor:
    """
    Edge-aware smoothness of mean-normalized disparity.

    L_s = mean |dx d*| exp(-|dx I|) + mean |dy d*| exp(-|dy I|), with image
    gradients averaged over channels. An empty direction contributes 0.
    """
    if disp.dim() == 2:
        disp = disp.unsqueeze(0)
    if disp.shape[-2:] != image.shape[-2:]:
        raise ShapeMismatchException(
            f"Disparity {tuple(disp.shape[-2:])} and image {tuple(image.shape[-2:])} dims differ"
        )
    mean = disp.mean()
    if mean.detach() <= 0:
        raise PreconditionException("Mean disparity must be positive")
    normalized = disp / mean

    disp_dx, disp_dy = _image_gradients(normalized)
    image_dx, image_dy = _image_gradients(image)
    weight_x = torch.exp(-image_dx.abs().mean(dim=0, keepdim=True))
    weight_y = torch.exp(-image_dy.abs().mean(dim=0, keepdim=True))

    loss = torch.zeros((), dtype=DTYPE)
    if disp_dx.numel() > 0:
        loss = loss + (disp_dx.abs() * weight_x).mean()
    if disp_dy.numel() > 0:
        loss = loss + (disp_dy.abs() * weight_y).mean()
    return loss


def interior_mask(height: int, width: int, border: int) -> Optional[torch.Tensor]:
    """Boolean mask excluding ``border`` pixels at each edge; None when border is 0."""
    if border == 0:
        return None
    if 2 * border >= height or 2 * border >= width:
        raise PreconditionException(f"Border {border} leaves no interior in {width}x{height}")
    mask = torch.zeros((height, width), dtype=torch.bool)
    mask[border:height - border, border:width - border] = True
    return mask


def scaled_border(border: int, scale: int) -> int:
    """Border width at pyramid level ``scale``, rounded up."""
    return math.ceil(border / 2 ** scale)


class LossTerms(NamedTuple):
    """Differentiable result of compute_total_loss."""

    total: torch.Tensor
    photometric: List[torch.Tensor]
    smoothness: List[torch.Tensor]
    min_map: Optional[torch.Tensor]


def compute_total_loss(
    target_levels: Sequence[torch.Tensor],
    warped_per_scale: Sequence[Sequence[torch.Tensor]],
    disp_per_scale: Sequence[torch.Tensor],
    cfg: LossConfig,
) -> LossTerms:
    """
    L = mean over scales of (mu * L_p + lambda * L_s).

    ``warped_per_scale[i]`` and ``disp_per_scale[i]`` belong to pyramid level
    ``cfg.scales[i]``; ``target_levels`` is indexed by level. Each scale's
    disparity is mean-normalized independently inside the smoothness term.
    ``min_map`` is the full-resolution min-error map, None when scale 0 is
    not configured.
    """
    if len(warped_per_scale) != len(cfg.scales) or len(disp_per_scale) != len(cfg.scales):
        raise ShapeMismatchException(
            f"Expected inputs for {len(cfg.scales)} scales, got {len(warped_per_scale)} warped "
            f"and {len(disp_per_scale)} disparity entries"
        )
    if len(target_levels) < cfg.num_levels:
        raise ShapeMismatchException(
            f"Target pyramid has {len(target_levels)} levels, scale {max(cfg.scales)} requested"
        )

    photometric: List[torch.Tensor] = []
    smoothness: List[torch.Tensor] = []
    terms: List[torch.Tensor] = []
    min_map: Optional[torch.Tensor] = None
    for scale, warped, disp in zip(cfg.scales, warped_per_scale, disp_per_scale):
        target = target_levels[scale]
        valid = interior_mask(target.shape[-2], target.shape[-1], scaled_border(cfg.border, scale))
        reprojection, error_map = min_reprojection_loss(target, warped, cfg, valid)
        smooth = smoothness_loss(disp, target)
        photometric.append(reprojection)
        smoothness.append(smooth)
        terms.append(cfg.mu * reprojection + cfg.lambda_ * smooth)
        if scale == 0:
            min_map = error_map

    total = sum(terms) / len(terms)
    return LossTerms(total=total, photometric=photometric, smoothness=smoothness, min_map=min_map)


def total_loss(
    target_pyr: Pyramid,
    warped_per_scale: Sequence[Sequence[Grid]],
    disp_per_scale: Sequence[Grid],
    cfg: LossConfig,
    full_scale_warped: Optional[Sequence[Grid]] = None,
) -> LossBreakdown:
    """
    Grid-level wrapper around compute_total_loss returning a serializable breakdown.

    The min-error map is always at full resolution. When scale 0 is not among
    ``cfg.scales`` it is computed from ``full_scale_warped``.

    Raises:
        PreconditionException: If scale 0 is not configured and no
            full-resolution candidates are given
    """
    with torch.no_grad():
        terms = compute_total_loss(
            [level.to_tensor() for level in target_pyr.levels],
            [[grid.to_tensor() for grid in warped] for warped in warped_per_scale],
            [grid.to_tensor() for grid in disp_per_scale],
            cfg,
        )
        min_map = terms.min_map
        if min_map is None:
            if not full_scale_warped:
                raise PreconditionException(
                    "Full-resolution candidates are required for the min-error map when scale 0 is not configured"
                )
            _, min_map = min_reprojection_loss(
                target_pyr.levels[0].to_tensor(), [grid.to_tensor() for grid in full_scale_warped], cfg
            )
    per_scale = [
        ScaleLoss(scale=scale, photometric=float(lp), smoothness=float(ls))
        for scale, lp, ls in zip(cfg.scales, terms.photometric, terms.smoothness)
    ]
    for part in per_scale:
        with bind_run(scale=part.scale):
            logger.debug(
                "Scale loss terms", extra={"context": {"photometric": part.photometric, "smoothness": part.smoothness}}
            )
    return LossBreakdown(
        total=float(terms.total),
        per_scale=per_scale,
        min_error_map=Grid.from_tensor(min_map),
    )
