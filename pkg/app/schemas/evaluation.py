"""
Pydantic schemas for depth evaluation
"""
from typing import List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator

# Column order of the results table.
METRIC_COLUMNS: Tuple[str, ...] = ("a1", "a2", "a3", "abs_rel", "rms", "log_rms", "sq_rel")

# Metrics where larger is better; the rest are errors.
ACCURACY_METRICS: Tuple[str, ...] = ("a1", "a2", "a3")


class DepthMetrics(BaseModel):
    """The seven depth evaluation numbers."""

    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    a1: float = Field(..., ge=0.0, le=1.0, description="Fraction of pixels with delta < 1.25")
    a2: float = Field(..., ge=0.0, le=1.0, description="Fraction of pixels with delta < 1.25^2")
    a3: float = Field(..., ge=0.0, le=1.0, description="Fraction of pixels with delta < 1.25^3")
    abs_rel: float = Field(..., ge=0.0)
    sq_rel: float = Field(..., ge=0.0)
    rms: float = Field(..., ge=0.0)
    log_rms: float = Field(..., ge=0.0)

    @model_validator(mode="after")
    def validate_ordering(self) -> "DepthMetrics":
        if not (self.a1 <= self.a2 <= self.a3):
            raise ValueError("Accuracy ratios must satisfy a1 <= a2 <= a3")
        return self

    def value(self, metric: str) -> float:
        if metric not in METRIC_COLUMNS:
            raise KeyError(f"Unknown metric '{metric}'")
        return float(getattr(self, metric))


class EvalConfig(BaseModel):
    """Clamping, scaling and log convention for compute_metrics."""

    model_config = ConfigDict(
        frozen=True,
        allow_inf_nan=False,
        json_schema_extra={
            "example": {
                "min_depth": 0.001,
                "max_depth": 80.0,
                "median_scaling": True,
                "log_base": "natural",
            }
        },
    )

    min_depth: float = Field(default=1e-3, gt=0.0)
    max_depth: float = Field(default=80.0, gt=0.0)
    median_scaling: bool = Field(default=False)
    log_base: Literal["natural", "ten"] = Field(default="natural")

    @model_validator(mode="after")
    def validate_range(self) -> "EvalConfig":
        if self.min_depth >= self.max_depth:
            raise ValueError("min_depth must be below max_depth")
        return self


class NamedMetrics(BaseModel):
    """One row of a results table."""

    name: str = Field(default="")
    metrics: DepthMetrics


class DepthReport(BaseModel):
    """Per-image rows plus their aggregate, as emitted by the eval command."""

    config: EvalConfig
    rows: List[NamedMetrics]
    aggregate: Optional[DepthMetrics] = None
    reference: List[NamedMetrics] = Field(default_factory=list, description="Published rows for comparison")
