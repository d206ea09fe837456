"""
Optimizable parameter groups and optimizer state
"""
import math
from typing import Dict, Literal, Tuple

import torch
from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.core.exceptions import PreconditionException, ShapeMismatchException
from app.models.grid import DTYPE

GroupName = Literal["inv_depth", "pose", "intrinsics_raw"]
GROUP_NAMES: Tuple[GroupName, ...] = ("inv_depth", "pose", "intrinsics_raw")

# User-facing names of the groups (CLI --free, optimize(free=...)).
FREE_GROUP_ALIASES: Dict[str, GroupName] = {
    "depth": "inv_depth",
    "pose": "pose",
    "intrinsics": "intrinsics_raw",
}


class ParamCoord(BaseModel):
    """A single scalar inside a parameter group, addressed by flat index."""

    model_config = ConfigDict(frozen=True)

    group: GroupName
    index: int = Field(..., ge=0)


class ParamGroups(BaseModel):
    """
    The three parameter groups of the view-synthesis objective.

    - ``inv_depth``: (height, width) unconstrained logits; disparity is their
      logistic squash.
    - ``pose``: (sources, 6) rows of axis-angle followed by translation,
      one row per source frame (target to source).
    - ``intrinsics_raw``: (fx, fy, cx, cy) with focals stored pre-softplus.

    The same container holds gradients, so range checks are not run on
    construction; call :meth:`validate_ranges` before evaluating parameters.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    inv_depth: torch.Tensor
    pose: torch.Tensor
    intrinsics_raw: torch.Tensor

    @model_validator(mode="after")
    def validate_shapes(self) -> "ParamGroups":
        if self.inv_depth.dim() != 2:
            raise ValueError(f"inv_depth must be (height, width), got {tuple(self.inv_depth.shape)}")
        if self.pose.dim() != 2 or self.pose.shape[1] != 6:
            raise ValueError(f"pose must be (sources, 6), got {tuple(self.pose.shape)}")
        if tuple(self.intrinsics_raw.shape) != (4,):
            raise ValueError(f"intrinsics_raw must be (4,), got {tuple(self.intrinsics_raw.shape)}")
        for name in GROUP_NAMES:
            if getattr(self, name).dtype != DTYPE:
                raise ValueError(f"{name} must be float64")
        return self

    def group(self, name: str) -> torch.Tensor:
        return getattr(self, name)

    def size(self, name: str) -> int:
        return int(self.group(name).numel())

    def replace(self, **groups: torch.Tensor) -> "ParamGroups":
        values = {name: self.group(name) for name in GROUP_NAMES}
        values.update(groups)
        return ParamGroups(**values)

    def get(self, coord: ParamCoord) -> float:
        return float(self.group(coord.group).detach().reshape(-1)[coord.index])

    def with_offset(self, coord: ParamCoord, delta: float) -> "ParamGroups":
        """Copy with one scalar shifted by ``delta``."""
        shifted = self.group(coord.group).detach().clone()
        flat = shifted.view(-1)
        if coord.index >= flat.numel():
            raise PreconditionException(
                f"Index {coord.index} out of range for group {coord.group} of size {flat.numel()}"
            )
        flat[coord.index] += delta
        return self.replace(**{coord.group: shifted})

    def detached(self) -> "ParamGroups":
        return ParamGroups(**{name: self.group(name).detach().clone() for name in GROUP_NAMES})

    def zeros_like(self) -> "ParamGroups":
        return ParamGroups(**{name: torch.zeros_like(self.group(name)) for name in GROUP_NAMES})

    def check_compatible(self, other: "ParamGroups") -> None:
        for name in GROUP_NAMES:
            if self.group(name).shape != other.group(name).shape:
                raise ShapeMismatchException(
                    f"Group {name} has shape {tuple(self.group(name).shape)}, "
                    f"expected {tuple(other.group(name).shape)}"
                )

    def validate_ranges(self) -> None:
        """Reject non-finite values and rotations with angle >= pi."""
        for name in GROUP_NAMES:
            if not torch.isfinite(self.group(name).detach()).all():
                raise PreconditionException(f"Parameter group {name} contains non-finite values")
        angles = self.pose.detach()[:, :3].norm(dim=1)
        if (angles >= math.pi).any():
            raise PreconditionException("Pose axis-angle magnitude must be below pi")

    def to_dict(self) -> Dict[str, list]:
        return {name: self.group(name).detach().cpu().tolist() for name in GROUP_NAMES}


LrScheduleName = Literal["cosine", "constant"]


class LrSchedule(BaseModel):
    """Learning-rate schedule resolved for one optimization run."""

    model_config = ConfigDict(frozen=True)

    name: LrScheduleName = Field(default="cosine")
    lr0: float = Field(..., gt=0)
    lr_min: float = Field(default=0.0, ge=0)
    total_steps: int = Field(..., ge=0)


class OptimState(BaseModel):
    """AdamW state: parameters, moment accumulators and the step counter."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    params: ParamGroups
    exp_avg: ParamGroups
    exp_avg_sq: ParamGroups
    step: int = Field(default=0, ge=0)
    schedule: LrSchedule

    @model_validator(mode="after")
    def validate_moments(self) -> "OptimState":
        self.exp_avg.check_compatible(self.params)
        self.exp_avg_sq.check_compatible(self.params)
        return self

    @classmethod
    def initial(cls, params: ParamGroups, schedule: LrSchedule) -> "OptimState":
        return cls(
            params=params,
            exp_avg=params.zeros_like(),
            exp_avg_sq=params.zeros_like(),
            step=0,
            schedule=schedule,
        )
