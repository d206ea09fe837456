from .adjust import AdjustConfig, InstanceManifestEntry
from .augment import AppliedEffect, AugmentRecord, WeatherConfig
from .evaluation import DepthMetrics, DepthReport, EvalConfig, NamedMetrics
from .gradcheck import GradReport, GroupGradStats
from .losses import LossBreakdown, LossConfig, ScaleLoss
from .manifest import RunManifest
from .training import AdamWHyper, TrainConfig, TrainResult
from .upsample import ShuffleSpec

__all__ = [
    "AdjustConfig", "InstanceManifestEntry",
    "AppliedEffect", "AugmentRecord", "WeatherConfig",
    "DepthMetrics", "DepthReport", "EvalConfig", "NamedMetrics",
    "GradReport", "GroupGradStats",
    "LossBreakdown", "LossConfig", "ScaleLoss",
    "RunManifest",
    "AdamWHyper", "TrainConfig", "TrainResult",
    "ShuffleSpec",
]
