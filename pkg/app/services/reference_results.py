"""
Published KITTI results of the MonoDepth2 variants, for comparison rows in reports
"""
from typing import Dict, List

from app.core.exceptions import NotFoundException, PreconditionException
from app.schemas.evaluation import ACCURACY_METRICS, METRIC_COLUMNS, DepthMetrics, NamedMetrics


def _row(a1: float, a2: float, a3: float, abs_rel: float, rms: float, log_rms: float, sq_rel: float) -> DepthMetrics:
    return DepthMetrics(a1=a1, a2=a2, a3=a3, abs_rel=abs_rel, rms=rms, log_rms=log_rms, sq_rel=sq_rel)


# Column order follows the published table: a1, a2, a3, abs_rel, rms, log_rms, sq_rel.
# A trailing "-skip-smooth" means disparity adjustment was not applied to the smoothness term.
REFERENCE_ROWS: Dict[str, DepthMetrics] = {
    "monodepth2": _row(0.877, 0.959, 0.981, 0.115, 4.863, 0.193, 0.903),
    "camless": _row(0.891, 0.964, 0.983, 0.106, 4.482, 0.182, 0.750),
    "monodepth2+maskrcnn": _row(0.9008, 0.9684, 0.9872, 0.1117, 3.977, 0.1886, 0.5114),
    "monodepth2+maskrcnn+espcn": _row(0.8403, 0.9651, 0.9858, 0.1214, 4.096, 0.205, 0.6251),
    "monodepth2+camless": _row(0.8629, 0.9542, 0.98, 0.1186, 4.737, 0.2103, 0.7843),
    "monodepth2+camless+weather": _row(0.8704, 0.9582, 0.9789, 0.1223, 4.934, 0.2016, 0.9271),
    "monodepth2+maskrcnn+camless": _row(0.9148, 0.9685, 0.9832, 0.0996, 4.25, 0.1887, 0.5722),
    "monodepth2+maskrcnn+camless-skip-smooth": _row(0.879, 0.9699, 0.9876, 0.111, 3.959, 0.177, 0.5079),
    "monodepth2+maskrcnn+espcn+camless": _row(0.9105, 0.9637, 0.9814, 0.0956, 3.746, 0.1858, 0.4868),
    "monodepth2+maskrcnn+espcn+camless-skip-smooth": _row(0.8854, 0.9621, 0.9842, 0.1166, 3.485, 0.1884, 0.4793),
}

BASELINE = "monodepth2"


def reference_row(name: str) -> NamedMetrics:
    if name not in REFERENCE_ROWS:
        raise NotFoundException("Reference row", name)
    return NamedMetrics(name=name, metrics=REFERENCE_ROWS[name])


def reference_table() -> List[NamedMetrics]:
    return [NamedMetrics(name=name, metrics=metrics) for name, metrics in REFERENCE_ROWS.items()]


def relative_improvement(baseline: DepthMetrics, variant: DepthMetrics, metric: str) -> float:
    """
    Fractional improvement of ``variant`` over ``baseline`` on one metric.

    Errors improve by going down: (b - v) / b. Accuracies improve by going
    up: (v - b) / b.
    """
    if metric not in METRIC_COLUMNS:
        raise PreconditionException(f"Unknown metric '{metric}'")
    before = baseline.value(metric)
    after = variant.value(metric)
    if before == 0:
        raise PreconditionException(f"Baseline {metric} is zero")
    if metric in ACCURACY_METRICS:
        return (after - before) / before
    return (before - after) / before


def improvements_over_baseline(metric: str = "rms", baseline: str = BASELINE) -> Dict[str, float]:
    """relative_improvement of every other reference row against ``baseline``."""
    base = reference_row(baseline).metrics
    return {
        name: relative_improvement(base, metrics, metric)
        for name, metrics in REFERENCE_ROWS.items()
        if name != baseline
    }
