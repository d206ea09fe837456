"""
Synthetic frame triplets with known depth, pose and intrinsics
"""
from typing import List, Literal, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.models.camera import Intrinsics, RigidTransform
from app.models.grid import Grid
from app.models.masks import InstanceMask

DepthProfile = Literal["fronto-plane", "slanted-plane", "two-layer"]


class TextureSpec(BaseModel):
    """Procedural sum-of-sinusoids colour texture painted on the scene planes."""

    model_config = ConfigDict(frozen=True)

    frequency: float = Field(..., gt=0, description="Cycles across the image width at the reference depth")
    seed: int = Field(..., ge=0)
    components: int = Field(default=3, ge=1)
    amplitude: float = Field(default=0.12, gt=0)


class SyntheticScene(BaseModel):
    """
    A target frame, its source frames and the ground truth that generated them.

    ``sources[0]`` is the previous frame and ``sources[1]`` the next one.
    ``gt_pose_vectors[i]`` is the (axis-angle, translation) 6-vector of the
    target-to-source transform ``gt_poses[i]``.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    target: Grid
    sources: List[Grid] = Field(..., min_length=1)
    gt_depth: Grid
    gt_pose_vectors: List[List[float]]
    gt_poses: List[RigidTransform]
    gt_intrinsics: Intrinsics
    min_depth: float = Field(..., gt=0)
    max_depth: float = Field(..., gt=0)
    depth_profile: DepthProfile
    reference_depth: float = Field(..., gt=0)
    pose_magnitude: float = Field(..., ge=0, description="Parallax in pixels at the reference depth")
    texture: TextureSpec
    coverage: List[float] = Field(default_factory=list)
    instances: List[InstanceMask] = Field(default_factory=list)

    @model_validator(mode="after")
    def validate_consistency(self) -> "SyntheticScene":
        if self.min_depth >= self.max_depth:
            raise ValueError("min_depth must be below max_depth")
        for frame in self.sources:
            if frame.shape != self.target.shape:
                raise ValueError("Source frames must match the target frame's dims")
        if not self.gt_depth.same_dims(self.target) or self.gt_depth.channels != 1:
            raise ValueError("gt_depth must be a single-channel grid matching the target")
        if len(self.gt_poses) != len(self.sources) or len(self.gt_pose_vectors) != len(self.sources):
            raise ValueError("One ground-truth pose is required per source frame")
        if any(len(vector) != 6 for vector in self.gt_pose_vectors):
            raise ValueError("Pose vectors must have 6 entries")
        depth = self.gt_depth.data
        if np.any(depth < self.min_depth) or np.any(depth > self.max_depth):
            raise ValueError("gt_depth must lie within [min_depth, max_depth]")
        return self

    @property
    def width(self) -> int:
        return self.target.width

    @property
    def height(self) -> int:
        return self.target.height

    @property
    def frames(self) -> Tuple[Grid, ...]:
        """(I_{t-1}, I_t, I_{t+1}) for the usual two-source scene."""
        return (self.sources[0], self.target, *self.sources[1:])
