"""
Pydantic schemas for instance-mask merging and disparity adjustment
"""
from typing import FrozenSet, Literal

from pydantic import BaseModel, ConfigDict, Field

# COCO category ids (detector label space, with its gaps).
COCO_PERSON = frozenset({1})
COCO_VEHICLES = frozenset({2, 3, 4, 5, 6, 7, 8, 9})
COCO_ANIMALS = frozenset({16, 17, 18, 19, 20, 21, 22, 23, 24, 25})
DEFAULT_CLASS_ALLOWLIST: FrozenSet[int] = COCO_PERSON | COCO_VEHICLES | COCO_ANIMALS


class AdjustConfig(BaseModel):
    """Which instances qualify and how their disparity is rewritten."""

    model_config = ConfigDict(
        frozen=True,
        json_schema_extra={
            "example": {
                "confidence_threshold": 0.7,
                "class_allowlist": [1, 3],
                "strategy": "median-flatten",
                "apply_to_smoothness": False,
            }
        },
    )

    confidence_threshold: float = Field(default=0.7, ge=0.0, le=1.0)
    class_allowlist: FrozenSet[int] = Field(default=DEFAULT_CLASS_ALLOWLIST)
    strategy: Literal["median-flatten", "none"] = Field(default="median-flatten")
    apply_to_smoothness: bool = Field(
        default=False, description="Also feed the adjusted disparity to the smoothness term"
    )

    def qualifies(self, confidence: float, class_id: int) -> bool:
        return confidence >= self.confidence_threshold and class_id in self.class_allowlist


class InstanceManifestEntry(BaseModel):
    """One line of the instance manifest: a PGM mask file and its detection metadata."""

    mask_file: str = Field(..., min_length=1)
    confidence: float = Field(..., ge=0.0, le=1.0)
    class_id: int = Field(..., ge=0)
