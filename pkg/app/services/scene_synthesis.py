"""
Procedural frame triplets with known depth, pose and intrinsics

Scenes are one or two textured planes. Every view is ray-cast against the
planes and coloured by a sum-of-sinusoids texture defined on the planes
themselves, so source frames agree with the ground truth up to the
resampling error of the warp being tested.
"""
import math
from typing import List, NamedTuple, Optional, Tuple

import numpy as np
import torch

from app.core.exceptions import PreconditionException, SceneConfigurationException
from app.core.logging import logger
from app.models.camera import Intrinsics, RigidTransform
from app.models.grid import DTYPE, Grid
from app.models.scene import DepthProfile, SyntheticScene, TextureSpec
from app.services.geometry import (
    assemble_k,
    backproject,
    compose_transform,
    invert_k,
    pixel_coordinates,
    project,
)

DEFAULT_INTRINSICS = Intrinsics(fx=0.8, fy=0.8, cx=0.5, cy=0.5)
REFERENCE_DEPTH = 0.35
MIN_COVERAGE = 0.9
MIN_SIZE = 16

SLANT_ANGLE = math.radians(20.0)
FOREGROUND_RATIO = 0.8
BACKGROUND_RATIO = 1.5


class _Plane(NamedTuple):
    """Plane n . P = offset in the target camera frame, optionally bounded in X and Y."""

    normal: np.ndarray
    offset: float
    bounds: Optional[Tuple[float, float, float, float]] = None  # x_min, x_max, y_min, y_max


class ProceduralTexture:
    """
    Colour texture 0.5 + amplitude * sum_k sin(2 pi f_k (cos a_k X + sin a_k Y) + phase_k).

    Orientations, phases and frequency jitter are drawn per channel from
    PCG64 seeded by the TextureSpec. With three components at amplitude 0.12 the
    values stay inside [0.14, 0.86].
    """

    def __init__(self, spec: TextureSpec, world_width: float):
        rng = np.random.Generator(np.random.PCG64(spec.seed))
        shape = (3, spec.components)
        self.amplitude = spec.amplitude
        self.orientation = rng.uniform(0.0, math.pi, size=shape)
        self.phase = rng.uniform(0.0, 2.0 * math.pi, size=shape)
        jitter = rng.uniform(0.75, 1.25, size=shape)
        self.frequency = jitter * spec.frequency / world_width

    def __call__(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Evaluate at plane coordinates; returns (..., 3)."""
        x = x[..., np.newaxis, np.newaxis]
        y = y[..., np.newaxis, np.newaxis]
        direction = np.cos(self.orientation) * x + np.sin(self.orientation) * y
        waves = np.sin(2.0 * math.pi * self.frequency * direction + self.phase)
        return 0.5 + self.amplitude * waves.sum(axis=-1)


def _planes(profile: DepthProfile, reference_depth: float, intrinsics: Intrinsics, width: int, height: int) -> List[_Plane]:
    if profile == "fronto-plane":
        return [_Plane(np.array([0.0, 0.0, 1.0]), reference_depth)]
    if profile == "slanted-plane":
        normal = np.array([0.0, math.sin(SLANT_ANGLE), math.cos(SLANT_ANGLE)])
        return [_Plane(normal, reference_depth * math.cos(SLANT_ANGLE))]

    near = FOREGROUND_RATIO * reference_depth
    far = BACKGROUND_RATIO * reference_depth
    # Central rectangle of the target view, edges on pixel boundaries.
    fx, fy = intrinsics.fx * width, intrinsics.fy * height
    cx, cy = intrinsics.cx * width, intrinsics.cy * height
    x_min = (width / 4 - 0.5 - cx) / fx * near
    x_max = (3 * width / 4 - 0.5 - cx) / fx * near
    y_min = (height / 4 - 0.5 - cy) / fy * near
    y_max = (3 * height / 4 - 0.5 - cy) / fy * near
    return [
        _Plane(np.array([0.0, 0.0, 1.0]), near, (x_min, x_max, y_min, y_max)),
        _Plane(np.array([0.0, 0.0, 1.0]), far),
    ]


def _pose_vector(profile: DepthProfile, sign: float, magnitude: float, reference_depth: float, fx_pixels: float) -> List[float]:
    """Target-to-source (axis-angle, translation) producing ``magnitude`` px parallax at the reference depth."""
    shift = magnitude * reference_depth / fx_pixels
    if profile == "fronto-plane":
        return [0.0, 0.0, 0.0, sign * shift, 0.0, 0.0]
    return [
        0.0, sign * 0.1 * magnitude / fx_pixels, 0.0,
        sign * 0.9 * shift, 0.0, sign * 0.0025 * magnitude * reference_depth,
    ]


def _render_view(
    planes: List[_Plane],
    texture: ProceduralTexture,
    transform: RigidTransform,
    rays: np.ndarray,
    height: int,
    width: int,
) -> Tuple[np.ndarray, np.ndarray]:
    """Ray-cast the planes from the camera at ``transform``; returns (image, depth)."""
    rotation = transform.rotation.detach().numpy()
    translation = transform.translation.detach().numpy()
    count = rays.shape[1]
    best_depth = np.full(count, np.inf)
    best_x = np.zeros(count)
    best_y = np.zeros(count)

    for plane in planes:
        normal = rotation @ plane.normal
        offset = plane.offset + normal @ translation
        denominator = normal @ rays
        with np.errstate(divide="ignore", invalid="ignore"):
            depth = np.where(denominator > 0, offset / denominator, np.inf)
        hit = np.isfinite(depth) & (depth > 0)
        # Hit points back in the target frame: P_t = R^T (s r - t).
        points = rotation.T @ (np.where(hit, depth, 0.0) * rays - translation[:, np.newaxis])
        if plane.bounds is not None:
            x_min, x_max, y_min, y_max = plane.bounds
            hit &= (points[0] >= x_min) & (points[0] <= x_max) & (points[1] >= y_min) & (points[1] <= y_max)
        closer = hit & (depth < best_depth)
        best_depth = np.where(closer, depth, best_depth)
        best_x = np.where(closer, points[0], best_x)
        best_y = np.where(closer, points[1], best_y)

    if not np.all(np.isfinite(best_depth)):
        raise SceneConfigurationException("Some camera rays miss every scene plane")
    image = texture(best_x, best_y).reshape(height, width, 3)
    return image, best_depth.reshape(height, width)


def coverage_fraction(
    depth: torch.Tensor, k: torch.Tensor, transform: RigidTransform, width: int, height: int
) -> float:
    """Fraction of target pixels whose reprojection lands inside the source frame."""
    flow = project(backproject(depth, invert_k(k)), k, transform, width, height)
    return float(flow.in_bounds().to(DTYPE).mean())


def render_scene(
    width: int,
    height: int,
    depth_profile: DepthProfile = "fronto-plane",
    pose_magnitude: float = 4.0,
    texture_freq: float = 4.0,
    seed: int = 0,
    intrinsics: Intrinsics = DEFAULT_INTRINSICS,
    min_depth: float = 0.1,
    max_depth: float = 100.0,
    reference_depth: float = REFERENCE_DEPTH,
    photometric_offset: float = 0.0,
) -> SyntheticScene:
    """
    Render a target frame and two source frames without size or coverage checks.

    Args:
        width: Image width in pixels
        height: Image height in pixels
        depth_profile: Scene geometry
        pose_magnitude: Parallax in pixels at the reference depth
        texture_freq: Texture cycles across the image width at the reference depth
        seed: Texture seed
        intrinsics: Ground-truth normalized intrinsics
        min_depth: Lower bound of the depth range
        max_depth: Upper bound of the depth range
        reference_depth: Depth of the (central) scene plane
        photometric_offset: Constant added to the source frames only

    Returns:
        SyntheticScene with sources ordered (previous, next)
    """
    if width < 1 or height < 1:
        raise PreconditionException(f"Invalid size {width}x{height}")
    k = assemble_k(intrinsics, width, height)
    rays = (invert_k(k) @ pixel_coordinates(width, height)).numpy()
    fx_pixels = intrinsics.fx * width

    texture_spec = TextureSpec(frequency=texture_freq, seed=seed)
    texture = ProceduralTexture(texture_spec, world_width=reference_depth / intrinsics.fx)
    planes = _planes(depth_profile, reference_depth, intrinsics, width, height)

    target, gt_depth = _render_view(planes, texture, RigidTransform.identity(), rays, height, width)
    if gt_depth.min() < min_depth or gt_depth.max() > max_depth:
        raise SceneConfigurationException(
            f"Scene depths [{gt_depth.min():.4f}, {gt_depth.max():.4f}] exceed [{min_depth}, {max_depth}]"
        )

    vectors, transforms, sources, coverage = [], [], [], []
    depth_tensor = torch.tensor(gt_depth, dtype=DTYPE)
    for sign in (-1.0, 1.0):
        vector = _pose_vector(depth_profile, sign, pose_magnitude, reference_depth, fx_pixels)
        transform = compose_transform(vector[:3], vector[3:])
        image, _ = _render_view(planes, texture, transform, rays, height, width)
        vectors.append(vector)
        transforms.append(transform)
        sources.append(Grid(data=image + photometric_offset))
        coverage.append(coverage_fraction(depth_tensor, k, transform, width, height))

    return SyntheticScene(
        target=Grid(data=target),
        sources=sources,
        gt_depth=Grid(data=gt_depth),
        gt_pose_vectors=vectors,
        gt_poses=transforms,
        gt_intrinsics=intrinsics,
        min_depth=min_depth,
        max_depth=max_depth,
        depth_profile=depth_profile,
        reference_depth=reference_depth,
        pose_magnitude=pose_magnitude,
        texture=texture_spec,
        coverage=coverage,
    )


def make_scene(
    width: int,
    height: int,
    depth_profile: DepthProfile = "fronto-plane",
    pose_magnitude: float = 4.0,
    texture_freq: float = 4.0,
    seed: int = 0,
    intrinsics: Intrinsics = DEFAULT_INTRINSICS,
) -> SyntheticScene:
    """
    Render a validated scene: at least 16x16 and at least 90% reprojection coverage per source.

    Raises:
        PreconditionException: If the image is smaller than 16x16
        SceneConfigurationException: If a source frame's coverage falls below 90%
    """
    if width < MIN_SIZE or height < MIN_SIZE:
        raise PreconditionException(f"Scenes must be at least {MIN_SIZE}x{MIN_SIZE}, got {width}x{height}")
    scene = render_scene(width, height, depth_profile, pose_magnitude, texture_freq, seed, intrinsics)
    worst = min(scene.coverage)
    if worst < MIN_COVERAGE:
        raise SceneConfigurationException(
            f"Pose magnitude {pose_magnitude} leaves only {worst:.1%} of pixels inside the source frame"
        )
    logger.info(
        "Synthesized scene",
        extra={"context": {
            "width": width,
            "height": height,
            "profile": depth_profile,
            "pose_magnitude": pose_magnitude,
            "coverage": scene.coverage,
        }},
    )
    return scene
