"""
Camera models: pinhole intrinsics, rigid transforms and flow-field grids
"""
from typing import List

import torch
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from app.models.grid import DTYPE

# Tolerance on orthonormality and determinant of a rotation block.
ROTATION_TOLERANCE = 1e-9

# Slack on the [-1, 1] frame test; the K round trip leaves edge pixels a few ulps outside.
BOUNDS_TOLERANCE = 1e-9


class Intrinsics(BaseModel):
    """
    Normalized pinhole parameters.

    Focal lengths are fractions of image width/height, offsets are fractions
    of the image size as well. Offsets are not constrained to [0, 1].
    """

    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    fx: float = Field(..., gt=0, description="Normalized horizontal focal length")
    fy: float = Field(..., gt=0, description="Normalized vertical focal length")
    cx: float = Field(..., description="Normalized horizontal principal point")
    cy: float = Field(..., description="Normalized vertical principal point")

    def as_tensor(self) -> torch.Tensor:
        return torch.tensor([self.fx, self.fy, self.cx, self.cy], dtype=DTYPE)

    def as_list(self) -> List[float]:
        return [self.fx, self.fy, self.cx, self.cy]

    @classmethod
    def from_tensor(cls, values: torch.Tensor) -> "Intrinsics":
        fx, fy, cx, cy = (float(v) for v in values.detach().cpu().reshape(4))
        return cls(fx=fx, fy=fy, cx=cx, cy=cy)


# Fixed K used by the MonoDepth2 baseline on KITTI (normalized form).
BASELINE_INTRINSICS = Intrinsics(fx=0.58, fy=1.92, cx=0.5, cy=0.5)

# K learned jointly with depth and pose on KITTI (normalized form).
LEARNED_INTRINSICS = Intrinsics(fx=0.8730, fy=0.7521, cx=1.8587, cy=1.2776)


class RigidTransform(BaseModel):
    """A 4x4 homogeneous transform [R | t] with R a proper rotation."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    matrix: torch.Tensor = Field(..., description="4x4 float64 homogeneous matrix")

    @field_validator("matrix")
    @classmethod
    def validate_matrix(cls, value: torch.Tensor) -> torch.Tensor:
        if tuple(value.shape) != (4, 4):
            raise ValueError(f"Transform must be 4x4, got {tuple(value.shape)}")
        plain = value.detach().to(DTYPE)
        if not torch.isfinite(plain).all():
            raise ValueError("Transform contains non-finite values")
        last_row = torch.tensor([0.0, 0.0, 0.0, 1.0], dtype=DTYPE)
        if not torch.equal(plain[3], last_row):
            raise ValueError("Last row of a rigid transform must be (0, 0, 0, 1)")
        rotation = plain[:3, :3]
        gram_error = (rotation.T @ rotation - torch.eye(3, dtype=DTYPE)).abs().max()
        if gram_error > ROTATION_TOLERANCE:
            raise ValueError(f"Rotation block is not orthonormal (error {float(gram_error):.3e})")
        if abs(float(torch.linalg.det(rotation)) - 1.0) > ROTATION_TOLERANCE:
            raise ValueError("Rotation block must have determinant +1")
        return value

    @property
    def rotation(self) -> torch.Tensor:
        return self.matrix[:3, :3]

    @property
    def translation(self) -> torch.Tensor:
        return self.matrix[:3, 3]

    @classmethod
    def identity(cls) -> "RigidTransform":
        return cls(matrix=torch.eye(4, dtype=DTYPE))

    def to_list(self) -> List[List[float]]:
        """Row-major nested list for JSON output."""
        return self.matrix.detach().cpu().tolist()


class FlowGrid(BaseModel):
    """
    Per-pixel sampling coordinates in normalized [-1, 1] units.

    ``coords`` has shape (height, width, 2) holding (x_norm, y_norm) in the
    layout expected by ``grid_sample``. ``valid`` is False where the projected
    depth fell at or below the positive-depth cutoff.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    coords: torch.Tensor
    valid: torch.Tensor

    @model_validator(mode="after")
    def validate_shapes(self) -> "FlowGrid":
        if self.coords.dim() != 3 or self.coords.shape[2] != 2:
            raise ValueError(f"Flow coords must be (height, width, 2), got {tuple(self.coords.shape)}")
        if tuple(self.valid.shape) != tuple(self.coords.shape[:2]):
            raise ValueError("Validity mask must match the flow grid's spatial dims")
        if self.valid.dtype != torch.bool:
            raise ValueError("Validity mask must be boolean")
        return self

    @property
    def height(self) -> int:
        return int(self.coords.shape[0])

    @property
    def width(self) -> int:
        return int(self.coords.shape[1])

    def in_bounds(self) -> torch.Tensor:
        """Boolean (height, width) mask of valid pixels whose coords lie in [-1, 1]."""
        inside = (self.coords.detach().abs() <= 1.0 + BOUNDS_TOLERANCE).all(dim=-1)
        return inside & self.valid
