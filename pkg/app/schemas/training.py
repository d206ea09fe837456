"""
Pydantic schemas for the direct (network-free) optimizer
"""
from typing import Dict, FrozenSet, List, Literal

from pydantic import BaseModel, ConfigDict, Field

from app.models.params import LrScheduleName

FreeGroup = Literal["depth", "pose", "intrinsics"]


class AdamWHyper(BaseModel):
    """AdamW hyper-parameters. weight_decay = 0 gives plain Adam."""

    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    lr: float = Field(default=1e-4, gt=0.0)
    beta1: float = Field(default=0.9, ge=0.0, lt=1.0)
    beta2: float = Field(default=0.999, ge=0.0, lt=1.0)
    eps: float = Field(default=1e-8, gt=0.0)
    weight_decay: float = Field(default=5e-2, ge=0.0)


class TrainConfig(BaseModel):
    """Everything optimize() needs besides the scene and the loss configuration."""

    model_config = ConfigDict(
        frozen=True,
        json_schema_extra={
            "example": {
                "free": ["depth"],
                "steps": 2000,
                "schedule": "cosine",
                "hyper": {"lr": 0.0001, "weight_decay": 0.05},
            }
        },
    )

    hyper: AdamWHyper = Field(default_factory=AdamWHyper)
    free: FrozenSet[FreeGroup] = Field(default=frozenset({"depth"}))
    steps: int = Field(default=2000, ge=0)
    schedule: LrScheduleName = Field(default="cosine")
    lr_min: float = Field(default=0.0, ge=0.0)
    freeze_rotation: bool = Field(
        default=False, description="Keep the axis-angle part of free poses at zero (R = I)"
    )
    initial_disparity: float = Field(default=0.3, gt=0.0, lt=1.0)
    log_every: int = Field(default=100, ge=1)


class TrainResult(BaseModel):
    """Recovered parameters and the loss trajectory of one optimize() run."""

    params: Dict[str, list]
    history: List[float]
    intrinsics: List[float] = Field(..., description="Recovered (fx, fy, cx, cy)")
    poses: List[List[List[float]]] = Field(..., description="Recovered 4x4 transforms, row-major")
    interior_abs_rel: float = Field(..., ge=0.0)
