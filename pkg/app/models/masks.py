"""
Instance segmentation masks consumed by the disparity adjustment
"""
import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from app.models.grid import Grid


class InstanceMask(BaseModel):
    """One detected object: a binary mask, its detector confidence and class label."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    mask: Grid = Field(..., description="Single-channel grid with values in {0, 1}")
    confidence: float = Field(..., ge=0.0, le=1.0)
    class_id: int = Field(..., ge=0, description="COCO category id")

    @field_validator("mask")
    @classmethod
    def validate_binary(cls, value: Grid) -> Grid:
        if value.channels != 1:
            raise ValueError(f"Instance mask must have 1 channel, got {value.channels}")
        if not np.all((value.data == 0.0) | (value.data == 1.0)):
            raise ValueError("Instance mask values must be 0 or 1")
        return value

    def as_bool(self) -> np.ndarray:
        """(height, width) boolean view of the mask."""
        return self.mask.plane(0) == 1.0
