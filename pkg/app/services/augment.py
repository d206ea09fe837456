"""
Seeded weather augmentation: snow, sun flare, fog and rain

Each call owns its random stream, numpy's Generator(PCG64(seed)). For every
effect in EFFECT_ORDER one uniform variate gates the effect; parameters are
drawn from the same stream only when the gate fires.
"""
import math
from typing import List, Tuple

import numpy as np
from skimage.draw import line_aa

from app.core.exceptions import PreconditionException
from app.core.logging import logger
from app.models.grid import Grid
from app.schemas.augment import (
    EFFECT_ORDER,
    AppliedEffect,
    AugmentRecord,
    EffectName,
    EffectParams,
    FlareParams,
    FloatRange,
    FogParams,
    RainParams,
    SnowParams,
    WeatherConfig,
)

RAIN_GRAY = 0.8
RAIN_OPACITY = 0.5
RAIN_BRIGHTNESS = 0.9
LUMA_WEIGHTS = np.array([0.299, 0.587, 0.114])


def _uniform(rng: np.random.Generator, span: FloatRange) -> float:
    return float(rng.uniform(span.low, span.high))


# ==================== PARAMETER DRAWS ====================


def draw_params(rng: np.random.Generator, effect: EffectName, cfg: WeatherConfig, width: int, height: int) -> EffectParams:
    """Draw one effect's parameters from the configured ranges, in pixel units."""
    if effect == "fog":
        return FogParams(coefficient=_uniform(rng, cfg.fog_coefficient))
    if effect == "snow":
        return SnowParams(threshold=_uniform(rng, cfg.snow_threshold), factor=_uniform(rng, cfg.snow_factor))
    if effect == "flare":
        return FlareParams(
            center_x=_uniform(rng, cfg.flare_center_x) * (width - 1),
            center_y=_uniform(rng, cfg.flare_center_y) * (height - 1),
            radius=max(_uniform(rng, cfg.flare_radius) * width, 1e-6),
            intensity=_uniform(rng, cfg.flare_intensity),
        )
    count = int(rng.integers(math.ceil(cfg.rain_streaks.low), math.floor(cfg.rain_streaks.high) + 1))
    slant = _uniform(rng, cfg.rain_slant)
    length = _uniform(rng, cfg.rain_length) * height
    starts = [(float(x), float(y)) for x, y in zip(rng.uniform(0, width, count), rng.uniform(0, height, count))]
    return RainParams(slant_deg=slant, length_px=length, starts=starts)


def plan(cfg: WeatherConfig, width: int, height: int) -> List[AppliedEffect]:
    """
    Gate and parameter draws for one augmentation, without touching pixels.

    Returns:
        The effects that fire, in application order
    """
    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    applied: List[AppliedEffect] = []
    for effect in EFFECT_ORDER:
        if rng.random() < cfg.p_each:
            applied.append(AppliedEffect(effect=effect, params=draw_params(rng, effect, cfg, width, height)))
    return applied


# ==================== RENDERING ====================


def _fog(data: np.ndarray, params: FogParams) -> np.ndarray:
    beta = params.coefficient
    return (1.0 - beta) * data + beta


def _rain(data: np.ndarray, params: RainParams) -> np.ndarray:
    height, width = data.shape[:2]
    layer = np.zeros((height, width))
    angle = math.radians(params.slant_deg)
    dx = params.length_px * math.sin(angle)
    dy = params.length_px * math.cos(angle)
    for x, y in params.starts:
        rows, cols, weights = line_aa(int(round(y)), int(round(x)), int(round(y + dy)), int(round(x + dx)))
        inside = (rows >= 0) & (rows < height) & (cols >= 0) & (cols < width)
        np.maximum.at(layer, (rows[inside], cols[inside]), weights[inside])
    alpha = (RAIN_OPACITY * layer)[:, :, np.newaxis]
    return ((1.0 - alpha) * data + alpha * RAIN_GRAY) * RAIN_BRIGHTNESS


def _snow(data: np.ndarray, params: SnowParams) -> np.ndarray:
    luma = data @ LUMA_WEIGHTS
    bright = (luma > params.threshold)[:, :, np.newaxis]
    return np.where(bright, np.minimum(data * params.factor, 1.0), data)


def _flare(data: np.ndarray, params: FlareParams) -> np.ndarray:
    height, width = data.shape[:2]
    rows, cols = np.mgrid[0:height, 0:width]
    distance = np.hypot(cols - params.center_x, rows - params.center_y)
    glow = np.maximum(0.0, 1.0 - distance / params.radius) * params.intensity
    return data + glow[:, :, np.newaxis]


_RENDERERS = {"fog": _fog, "rain": _rain, "snow": _snow, "flare": _flare}


def _check_rgb(image: Grid) -> None:
    if image.channels != 3:
        raise PreconditionException(f"Weather effects need a 3-channel image, got {image.channels}")
    if image.data.min() < 0.0 or image.data.max() > 1.0:
        raise PreconditionException("Weather effects need values in [0, 1]")


def apply_effect(image: Grid, effect: EffectName, params: EffectParams) -> Grid:
    """
    Render one effect with fixed parameters; the result is clamped to [0, 1].

    Raises:
        PreconditionException: If the image is not RGB in [0, 1]
    """
    _check_rgb(image)
    if effect not in _RENDERERS:
        raise PreconditionException(f"Unknown effect '{effect}'")
    return Grid(data=np.clip(_RENDERERS[effect](image.data, params), 0.0, 1.0))


def augment(image: Grid, cfg: WeatherConfig) -> Tuple[Grid, AugmentRecord]:
    """
    Apply the gated effects in order snow, flare, fog, rain.

    With no effect firing the input grid itself is returned.
    """
    _check_rgb(image)
    effects = plan(cfg, image.width, image.height)
    result = image
    for applied in effects:
        result = apply_effect(result, applied.effect, applied.params)
    logger.debug(
        "Augmented image",
        extra={"context": {"seed": cfg.seed, "effects": [applied.effect for applied in effects]}},
    )
    return result, AugmentRecord(seed=cfg.seed, p_each=cfg.p_each, effects=effects)
