"""
Pydantic schemas for weather augmentation
"""
from typing import List, Literal, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, model_validator

EffectName = Literal["snow", "flare", "fog", "rain"]

# Fixed application order.
EFFECT_ORDER: Tuple[EffectName, ...] = ("snow", "flare", "fog", "rain")


class FloatRange(BaseModel):
    """Closed interval [low, high] a parameter is drawn from."""

    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    low: float
    high: float

    @model_validator(mode="after")
    def validate_order(self) -> "FloatRange":
        if self.low > self.high:
            raise ValueError(f"Empty range [{self.low}, {self.high}]")
        return self

    def within(self, lower: float, upper: float) -> bool:
        return lower <= self.low and self.high <= upper


def _span(low: float, high: float) -> FloatRange:
    return FloatRange(low=low, high=high)


# Documented bounds every configured range must sit inside.
PARAMETER_BOUNDS = {
    "fog_coefficient": (0.0, 1.0),
    "rain_streaks": (0.0, 500.0),
    "rain_length": (0.0, 1.0),
    "rain_slant": (-45.0, 45.0),
    "snow_threshold": (0.0, 1.0),
    "snow_factor": (1.0, 5.0),
    "flare_center_x": (0.0, 1.0),
    "flare_center_y": (0.0, 1.0),
    "flare_radius": (0.0, 2.0),
    "flare_intensity": (0.0, 1.0),
}


class WeatherConfig(BaseModel):
    """
    Gate probability, seed and parameter ranges for the four weather effects.

    Lengths and radii are fractions of the image height and width so the
    same configuration works at any resolution. The random stream is
    numpy's PCG64 seeded with ``seed``.
    """

    model_config = ConfigDict(
        frozen=True,
        json_schema_extra={"example": {"p_each": 0.3, "seed": 42}},
    )

    p_each: float = Field(default=0.3, ge=0.0, le=1.0)
    seed: int = Field(default=0, ge=0, lt=2 ** 64)

    fog_coefficient: FloatRange = Field(default_factory=lambda: _span(0.3, 1.0))
    rain_streaks: FloatRange = Field(default_factory=lambda: _span(10, 40), description="Streak count")
    rain_length: FloatRange = Field(default_factory=lambda: _span(0.05, 0.15), description="Fraction of height")
    rain_slant: FloatRange = Field(default_factory=lambda: _span(-10.0, 10.0), description="Degrees from vertical")
    snow_threshold: FloatRange = Field(default_factory=lambda: _span(0.5, 0.8), description="Luma threshold")
    snow_factor: FloatRange = Field(default_factory=lambda: _span(1.2, 2.5), description="Luma multiplier")
    flare_center_x: FloatRange = Field(default_factory=lambda: _span(0.0, 1.0), description="Fraction of width")
    flare_center_y: FloatRange = Field(default_factory=lambda: _span(0.0, 0.5), description="Fraction of height")
    flare_radius: FloatRange = Field(default_factory=lambda: _span(0.1, 0.4), description="Fraction of width")
    flare_intensity: FloatRange = Field(default_factory=lambda: _span(0.3, 0.7))

    @model_validator(mode="after")
    def validate_bounds(self) -> "WeatherConfig":
        for name, (lower, upper) in PARAMETER_BOUNDS.items():
            if not getattr(self, name).within(lower, upper):
                raise ValueError(f"Range for {name} must lie within [{lower}, {upper}]")
        return self


class FogParams(BaseModel):
    coefficient: float = Field(..., ge=0.0, le=1.0)


class RainParams(BaseModel):
    """Streaks share one slant and length; ``starts`` holds (x, y) pixel positions."""

    slant_deg: float
    length_px: float = Field(..., ge=0.0)
    starts: List[Tuple[float, float]]


class SnowParams(BaseModel):
    threshold: float = Field(..., ge=0.0, le=1.0)
    factor: float = Field(..., ge=1.0)


class FlareParams(BaseModel):
    """Centre in pixels, radius in pixels, additive peak intensity."""

    center_x: float
    center_y: float
    radius: float = Field(..., gt=0.0)
    intensity: float = Field(..., ge=0.0, le=1.0)


EffectParams = Union[FogParams, RainParams, SnowParams, FlareParams]


class AppliedEffect(BaseModel):
    effect: EffectName
    params: EffectParams


class AugmentRecord(BaseModel):
    """Which effects fired, in application order, with their drawn parameters."""

    seed: int
    p_each: float
    effects: List[AppliedEffect] = Field(default_factory=list)
