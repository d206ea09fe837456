"""
Pinhole geometry: intrinsics, rigid transforms, backprojection, projection and resampling

All tensors are float64. Images are (channels, height, width); pixel
coordinates run u in [0, W - 1] left to right and v in [0, H - 1] top to
bottom. Normalized sampling coordinates use the align-corners convention
x_norm = 2u / (W - 1) - 1 so that grid corners land on image corners.
"""
from typing import Sequence, Tuple, Union

import numpy as np
import torch
import torch.nn.functional as F
from scipy.linalg import solve_triangular

from app.core.exceptions import PreconditionException, ShapeMismatchException
from app.models.camera import FlowGrid, Intrinsics, RigidTransform
from app.models.grid import DTYPE

# Projected depths at or below this are flagged invalid.
EPS_Z = 1e-7

# Below this rotation angle Rodrigues falls back to I + [v]x.
SMALL_ANGLE = 1e-8

Real = Union[float, torch.Tensor]
TensorLike = Union[torch.Tensor, Sequence[float], np.ndarray]


def _tensor(value: TensorLike) -> torch.Tensor:
    if isinstance(value, torch.Tensor):
        return value if value.dtype == DTYPE else value.to(DTYPE)
    return torch.as_tensor(np.asarray(value, dtype=np.float64), dtype=DTYPE)


# ==================== INTRINSICS ====================


def softplus(x: Real) -> Real:
    """
    Overflow-safe log(1 + exp(x)).

    Evaluated as logaddexp(x, 0), which equals x + log1p(exp(-x)) for large x
    and stays strictly positive for very negative x.
    """
    if isinstance(x, torch.Tensor):
        return torch.logaddexp(x, torch.zeros_like(x))
    return float(np.logaddexp(float(x), 0.0))


def inverse_softplus(y: Real) -> Real:
    """Inverse of softplus for y > 0: y + log(-expm1(-y))."""
    if isinstance(y, torch.Tensor):
        if (y.detach() <= 0).any():
            raise PreconditionException("inverse_softplus needs positive inputs")
        return y + torch.log(-torch.expm1(-y))
    if y <= 0:
        raise PreconditionException("inverse_softplus needs positive inputs")
    return float(y + np.log(-np.expm1(-y)))


def intrinsics_from_raw(raw: torch.Tensor) -> torch.Tensor:
    """Map raw (fx, fy, cx, cy) to intrinsics: softplus on the focals, offsets unchanged."""
    return torch.cat([softplus(raw[:2]), raw[2:]])


def raw_from_intrinsics(intrinsics: Intrinsics) -> torch.Tensor:
    """Raw parameters that intrinsics_from_raw maps back to ``intrinsics``."""
    values = intrinsics.as_tensor()
    return torch.cat([inverse_softplus(values[:2]), values[2:]])


def assemble_k(intrinsics: Union[Intrinsics, torch.Tensor], width: int, height: int, scale: int = 0) -> torch.Tensor:
    """
    Build the 3x3 pixel-unit K for pyramid level ``scale``.

    Args:
        intrinsics: Normalized (fx, fy, cx, cy), as a model or a 4-tensor
        width: Full-resolution width in pixels
        height: Full-resolution height in pixels
        scale: Pyramid level; dims are divided by 2^scale

    Returns:
        [[fx W_s, 0, cx W_s], [0, fy H_s, cy H_s], [0, 0, 1]]
    """
    if scale < 0:
        raise PreconditionException(f"scale must be non-negative, got {scale}")
    factor = 2 ** scale
    if width % factor or height % factor:
        raise PreconditionException(f"{width}x{height} is not divisible by 2^{scale}")
    values = intrinsics.as_tensor() if isinstance(intrinsics, Intrinsics) else _tensor(intrinsics)
    fx, fy, cx, cy = values[0], values[1], values[2], values[3]
    width_s = float(width // factor)
    height_s = float(height // factor)
    zero = torch.zeros((), dtype=DTYPE)
    one = torch.ones((), dtype=DTYPE)
    return torch.stack([
        torch.stack([fx * width_s, zero, cx * width_s]),
        torch.stack([zero, fy * height_s, cy * height_s]),
        torch.stack([zero, zero, one]),
    ])


def invert_k(k: TensorLike) -> torch.Tensor:
    """
    Closed-form inverse of an upper-triangular 3x3 matrix with positive diagonal.

    Raises:
        PreconditionException: If K is not upper-triangular or a diagonal entry is not positive
    """
    k = _tensor(k)
    if tuple(k.shape) != (3, 3):
        raise ShapeMismatchException(f"K must be 3x3, got {tuple(k.shape)}")
    plain = k.detach()
    if plain[1, 0] != 0 or plain[2, 0] != 0 or plain[2, 1] != 0:
        raise PreconditionException("K must be upper-triangular")
    if (torch.diagonal(plain) <= 0).any():
        raise PreconditionException("K must have a positive diagonal")

    a, s, c = k[0, 0], k[0, 1], k[0, 2]
    b, d = k[1, 1], k[1, 2]
    e = k[2, 2]
    zero = torch.zeros((), dtype=DTYPE)
    return torch.stack([
        torch.stack([1.0 / a, -s / (a * b), (s * d - b * c) / (a * b * e)]),
        torch.stack([zero, 1.0 / b, -d / (b * e)]),
        torch.stack([zero, zero, 1.0 / e]),
    ])


# ==================== RIGID TRANSFORMS ====================


def _skew(v: torch.Tensor) -> torch.Tensor:
    zero = torch.zeros((), dtype=DTYPE)
    return torch.stack([
        torch.stack([zero, -v[2], v[1]]),
        torch.stack([v[2], zero, -v[0]]),
        torch.stack([-v[1], v[0], zero]),
    ])


def axis_angle_to_rotation(v: TensorLike) -> torch.Tensor:
    """
    Rodrigues formula R = I + sin(t)/t [v]x + (1 - cos(t))/t^2 [v]x^2 with t = |v|.

    Angles below SMALL_ANGLE use the first-order I + [v]x. The angle is
    substituted before the square root so the unused branch never produces
    NaN gradients.
    """
    v = _tensor(v)
    if not torch.isfinite(v.detach()).all():
        raise PreconditionException("Axis-angle must be finite")
    identity = torch.eye(3, dtype=DTYPE)
    skew = _skew(v)

    theta_sq = torch.dot(v, v)
    small = theta_sq < SMALL_ANGLE ** 2
    theta = torch.sqrt(torch.where(small, torch.ones_like(theta_sq), theta_sq))
    sin_term = torch.sin(theta) / theta
    # 1 - cos(t) = 2 sin^2(t / 2), free of cancellation for small t
    cos_term = 2.0 * (torch.sin(0.5 * theta) / theta) ** 2

    full = identity + sin_term * skew + cos_term * (skew @ skew)
    first_order = identity + skew
    return torch.where(small, first_order, full)


def compose_transform(axis_angle: TensorLike, translation: TensorLike, invert: bool = False) -> RigidTransform:
    """
    Build T = [R | t] from an axis-angle and a translation.

    With ``invert`` the exact inverse [R^T | -R^T t] is returned.
    """
    rotation = axis_angle_to_rotation(axis_angle)
    t = _tensor(translation)
    if not torch.isfinite(t.detach()).all():
        raise PreconditionException("Translation must be finite")
    if invert:
        rotation = rotation.T
        t = -(rotation @ t)
    top = torch.cat([rotation, t.reshape(3, 1)], dim=1)
    bottom = torch.tensor([[0.0, 0.0, 0.0, 1.0]], dtype=DTYPE)
    return RigidTransform(matrix=torch.cat([top, bottom], dim=0))


# ==================== DEPTH AND WARPING ====================


def disparity_to_depth(disp: torch.Tensor, min_depth: float, max_depth: float) -> torch.Tensor:
    """
    Convert disparity in [0, 1] to depth in [min_depth, max_depth].

    scaled = 1/max + (1/min - 1/max) * disp; depth = 1 / scaled.
    """
    if not 0 < min_depth < max_depth:
        raise PreconditionException(f"Need 0 < min_depth < max_depth, got ({min_depth}, {max_depth})")
    plain = disp.detach()
    if (plain < 0).any() or (plain > 1).any():
        raise PreconditionException("Disparity values must lie in [0, 1]")
    min_disp = 1.0 / max_depth
    max_disp = 1.0 / min_depth
    # lerp hits both endpoints exactly
    scaled = torch.lerp(torch.full_like(disp, min_disp), torch.full_like(disp, max_disp), disp)
    return 1.0 / scaled


def depth_to_disparity(depth: torch.Tensor, min_depth: float, max_depth: float) -> torch.Tensor:
    """Inverse of disparity_to_depth."""
    min_disp = 1.0 / max_depth
    max_disp = 1.0 / min_depth
    return (1.0 / depth - min_disp) / (max_disp - min_disp)


def pixel_coordinates(width: int, height: int) -> torch.Tensor:
    """Homogeneous pixel coordinates (u, v, 1) as a (3, height * width) tensor, row-major."""
    v, u = torch.meshgrid(
        torch.arange(height, dtype=DTYPE), torch.arange(width, dtype=DTYPE), indexing="ij"
    )
    return torch.stack([u.reshape(-1), v.reshape(-1), torch.ones(height * width, dtype=DTYPE)])


def backproject(depth: torch.Tensor, k_inv: TensorLike) -> torch.Tensor:
    """
    Lift every pixel to 3-D: P(u, v) = depth(u, v) * K^-1 (u, v, 1)^T.

    Args:
        depth: (height, width) or (1, height, width) positive depths
        k_inv: 3x3 inverse intrinsics

    Returns:
        (3, height, width) camera-frame points
    """
    if depth.dim() == 3:
        depth = depth[0]
    if (depth.detach() <= 0).any():
        raise PreconditionException("Depth must be positive everywhere")
    height, width = depth.shape
    rays = _tensor(k_inv) @ pixel_coordinates(width, height)
    points = rays * depth.reshape(1, -1)
    return points.reshape(3, height, width)


def _normalize(coord: torch.Tensor, size: int) -> torch.Tensor:
    return 2.0 * coord / max(size - 1, 1) - 1.0


def project(points: torch.Tensor, k: TensorLike, transform: RigidTransform, width: int, height: int) -> FlowGrid:
    """
    Project points through T then K into a normalized flow-field grid.

    p' = K (R P + t); (u', v') = (p'_x / p'_z, p'_y / p'_z). Pixels with
    p'_z <= EPS_Z are flagged invalid; their coordinates are computed with a
    unit denominator and carry no meaning.
    """
    if tuple(points.shape) != (3, height, width):
        raise ShapeMismatchException(
            f"Points of shape {tuple(points.shape)} do not match {width}x{height}"
        )
    flat = points.reshape(3, -1)
    camera = transform.rotation @ flat + transform.translation.reshape(3, 1)
    pixels = _tensor(k) @ camera

    depth = pixels[2]
    valid = depth > EPS_Z
    safe_depth = torch.where(valid, depth, torch.ones_like(depth))
    u = pixels[0] / safe_depth
    v = pixels[1] / safe_depth

    coords = torch.stack([_normalize(u, width), _normalize(v, height)], dim=-1)
    return FlowGrid(coords=coords.reshape(height, width, 2), valid=valid.detach().reshape(height, width))


def unnormalize(flow: FlowGrid, width: int, height: int) -> torch.Tensor:
    """Pixel coordinates (u, v) of a flow grid as a (height, width, 2) tensor."""
    scale = torch.tensor([(width - 1) / 2.0, (height - 1) / 2.0], dtype=DTYPE)
    return (flow.coords + 1.0) * scale


def bilinear_sample(image: torch.Tensor, flow: FlowGrid, padding: str = "border") -> torch.Tensor:
    """
    Bilinearly sample ``image`` at the flow grid's coordinates.

    Args:
        image: (channels, height_in, width_in)
        flow: Sampling grid; its dims define the output dims
        padding: "zeros" or "border" rule for out-of-range reads

    Returns:
        (channels, flow.height, flow.width), zero where the flow is invalid
    """
    if padding not in ("zeros", "border"):
        raise PreconditionException(f"Unknown padding '{padding}'")
    if image.dim() != 3:
        raise ShapeMismatchException(f"Image must be (channels, height, width), got {tuple(image.shape)}")
    sampled = F.grid_sample(
        image.unsqueeze(0),
        flow.coords.unsqueeze(0),
        mode="bilinear",
        padding_mode=padding,
        align_corners=True,
    )[0]
    return torch.where(flow.valid.unsqueeze(0), sampled, torch.zeros_like(sampled))


def warp_image(
    image: torch.Tensor,
    depth: torch.Tensor,
    k: torch.Tensor,
    transform: RigidTransform,
    padding: str = "border",
) -> Tuple[torch.Tensor, FlowGrid]:
    """
    Synthesize the target view from ``image`` given target depth, K and T.

    Returns:
        (warped image, flow grid)
    """
    height, width = depth.shape[-2:]
    points = backproject(depth, invert_k(k))
    flow = project(points, k, transform, width, height)
    return bilinear_sample(image, flow, padding), flow


# ==================== K*t AMBIGUITY ====================


def kt_transfer(k: TensorLike, t: TensorLike, k_alt: TensorLike) -> np.ndarray:
    """
    Translation t' with K_alt t' = K t.

    Under pure translation the reprojection depends only on K t, so
    (K_alt, t') explains the same motion as (K, t).

    Raises:
        PreconditionException: If a matrix is not upper-triangular or K_alt is singular
    """
    k = np.asarray(_tensor(k).detach(), dtype=np.float64)
    k_alt = np.asarray(_tensor(k_alt).detach(), dtype=np.float64)
    t = np.asarray(_tensor(t).detach(), dtype=np.float64).reshape(3)
    for name, matrix in (("K", k), ("K_alt", k_alt)):
        if matrix.shape != (3, 3):
            raise ShapeMismatchException(f"{name} must be 3x3, got {matrix.shape}")
        if np.any(np.tril(matrix, -1) != 0):
            raise PreconditionException(f"{name} must be upper-triangular")
    if np.any(np.diag(k_alt) == 0):
        raise PreconditionException("K_alt is singular")
    if np.any(np.diag(k) == 0):
        raise PreconditionException("K is singular")
    return solve_triangular(k_alt, k @ t, lower=False)
