"""
Pydantic schemas for the photometric and smoothness loss stack
"""
from typing import List, Literal

from pydantic import BaseModel, ConfigDict, Field, field_validator

from app.models.grid import Grid


class LossConfig(BaseModel):
    """
    Every scalar of the combined loss L = mu * L_p + lambda * L_s.

    ``border`` erodes the region over which L_p is averaged by that many
    full-resolution pixels (scaled down per pyramid level).
    """

    model_config = ConfigDict(
        frozen=True,
        allow_inf_nan=False,
        populate_by_name=True,
        json_schema_extra={
            "example": {
                "alpha": 0.85,
                "mu": 1.0,
                "lambda": 0.001,
                "scales": [0, 1, 2, 3],
                "padding": "border",
                "border": 0,
            }
        },
    )

    alpha: float = Field(default=0.85, ge=0.0, le=1.0, description="SSIM weight inside pe")
    mu: float = Field(default=1.0, ge=0.0, description="Reprojection loss weight")
    lambda_: float = Field(default=1e-3, ge=0.0, alias="lambda", description="Smoothness loss weight")
    ssim_c1: float = Field(default=1e-4, gt=0.0, description="SSIM constant (0.01)^2")
    ssim_c2: float = Field(default=9e-4, gt=0.0, description="SSIM constant (0.03)^2")
    scales: List[int] = Field(default=[0, 1, 2, 3], min_length=1, description="Pyramid levels used")
    padding: Literal["zeros", "border"] = Field(default="border", description="Out-of-range sampling rule")
    border: int = Field(default=0, ge=0, description="Pixels excluded from L_p at each image edge")

    @field_validator("scales")
    @classmethod
    def validate_scales(cls, value: List[int]) -> List[int]:
        if any(scale < 0 for scale in value):
            raise ValueError("Scales must be non-negative")
        if len(set(value)) != len(value):
            raise ValueError("Scales must be distinct")
        return sorted(value)

    @property
    def num_levels(self) -> int:
        """Pyramid depth needed to serve every configured scale."""
        return max(self.scales) + 1


class ScaleLoss(BaseModel):
    """Reprojection and smoothness terms at one pyramid level."""

    model_config = ConfigDict(frozen=True)

    scale: int = Field(..., ge=0)
    photometric: float = Field(..., ge=0.0, description="L_p at this scale")
    smoothness: float = Field(..., ge=0.0, description="L_s at this scale")


class LossBreakdown(BaseModel):
    """Total loss, its per-scale parts and the full-resolution min-error map."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    total: float
    per_scale: List[ScaleLoss]
    min_error_map: Grid = Field(..., exclude=True)

    def recompute_total(self, mu: float, lambda_: float) -> float:
        """Rebuild the total from its parts: mean over scales of mu*L_p + lambda*L_s."""
        terms = [mu * part.photometric + lambda_ * part.smoothness for part in self.per_scale]
        return sum(terms) / len(terms)
