"""
Pydantic schema for sub-pixel rearrangement
"""
from pydantic import BaseModel, ConfigDict, Field


class ShuffleSpec(BaseModel):
    """Upscale factor r of a pixel shuffle; inputs need C * r^2 channels."""

    model_config = ConfigDict(frozen=True)

    r: int = Field(..., ge=1)

    @property
    def block(self) -> int:
        return self.r * self.r
