"""Sensitivity-driven refinement of a raw detection result.

A single knob alpha in [0, 100] controls a per-point tolerance derived from
the trend component: anomalies whose residual magnitude stays inside the
tolerance are suppressed (tuning never adds anomalies). Larger alpha means
a tighter tolerance, hence more anomalies reported.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import LengthMismatch, OutOfRange
from .series import TimeSeries
from .transforms import decompose

FACTOR_BASE = 2.0
FACTOR_SCALE = 10.0
FACTOR_ANCHOR = 50.0  # factor(50) == 1
DEFAULT_ALPHA = 50.0


@dataclass(frozen=True)
class TuningResult:
    adjusted_labels: np.ndarray
    delta: np.ndarray
    lower: np.ndarray
    upper: np.ndarray


def factor(alpha: float) -> float:
    """Exponentially decreasing tolerance multiplier, anchored at factor(50)=1."""
    if not 0.0 <= alpha <= 100.0:
        raise OutOfRange(f"alpha must be within [0, 100], got {alpha}")
    return float(FACTOR_BASE ** ((FACTOR_ANCHOR - alpha) / FACTOR_SCALE))


def _tolerance(values: np.ndarray, alpha: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    dec = decompose(values)
    trend_mag = np.abs(dec.trend)
    mu = 0.5 * trend_mag + 0.5 * trend_mag.mean()
    delta = factor(alpha) * mu
    return delta, dec.trend + dec.seasonal, dec.residual


def tune(series: TimeSeries | np.ndarray, labels: np.ndarray, alpha: float) -> TuningResult:
    """Suppress flagged anomalies whose |residual| is within the tolerance."""
    values = series.values if isinstance(series, TimeSeries) else np.asarray(series, dtype=np.float64)
    labels = np.asarray(labels, dtype=bool)
    if labels.shape != values.shape:
        raise LengthMismatch("labels length must equal series length")
    delta, baseline, residual = _tolerance(values, alpha)
    adjusted = labels & (np.abs(residual) > delta)
    return TuningResult(adjusted, delta, baseline - delta, baseline + delta)


def band(series: TimeSeries | np.ndarray, alpha: float) -> tuple[np.ndarray, np.ndarray]:
    """The (lower, upper) tolerance band drawn around trend + seasonal."""
    values = series.values if isinstance(series, TimeSeries) else np.asarray(series, dtype=np.float64)
    delta, baseline, _ = _tolerance(values, alpha)
    return baseline - delta, baseline + delta
