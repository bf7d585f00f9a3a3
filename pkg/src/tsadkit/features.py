"""Fixed-schema statistical featurization of a series window.

Four transformed views of the window (identity, spectral-residual saliency,
FFT amplitude, de-seasonalized residual) each contribute 19 statistics, plus
6 global shape descriptors: 4 * 19 + 6 = 82 values. Statistics that are
undefined on degenerate input (zero variance, zero MAD) are mapped to 0 so
the feature space stays total for the selector.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import TooShort
from .transforms import decompose, fft_amplitude, sr_saliency

FEATURE_DIMENSION = 82
SCHEMA_VERSION = 1
MIN_WINDOW = 8

_TRANSFORM_NAMES = ("identity", "sr_saliency", "fft_amplitude", "deseasonalized")
_EXTRACTOR_NAMES = (
    "mean",
    "variance",
    "std",
    "skewness",
    "kurtosis",
    "min",
    "max",
    "range",
    "median",
    "mad",
    "first_last_delta",
    "autocorr_lag1",
    "autocorr_lag2",
    "autocorr_lag3",
    "mean_crossings",
    "longest_increasing_run",
    "peak_count",
    "binned_entropy",
    "trend_slope",
)
_GLOBAL_NAMES = (
    "period",
    "seasonality_strength",
    "trend_strength",
    "anomaly_free_ratio",
    "coefficient_of_variation",
    "signal_to_mad",
)


@dataclass(frozen=True)
class FeatureVector:
    values: np.ndarray
    schema_version: int = SCHEMA_VERSION

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", np.asarray(self.values, dtype=np.float64))
        assert self.values.shape == (FEATURE_DIMENSION,)
        assert np.all(np.isfinite(self.values))


def _finite(x: float) -> float:
    return float(x) if np.isfinite(x) else 0.0


def _autocorr(v: np.ndarray, lag: int) -> float:
    x = v - v.mean()
    denom = float(np.dot(x, x))
    if denom <= 0.0 or lag >= v.size:
        return 0.0
    return _finite(np.dot(x[:-lag], x[lag:]) / denom)


def _mean_crossings(v: np.ndarray) -> float:
    centered = v - v.mean()
    return float(np.count_nonzero(centered[:-1] * centered[1:] < 0))


def _longest_increasing_run(v: np.ndarray) -> float:
    best = run = 1
    for i in range(1, v.size):
        run = run + 1 if v[i] > v[i - 1] else 1
        best = max(best, run)
    return float(best)


def _peak_count(v: np.ndarray) -> float:
    if v.size < 3:
        return 0.0
    bar = v.mean() + v.std()
    inner = v[1:-1]
    peaks = (inner > v[:-2]) & (inner > v[2:]) & (inner > bar)
    return float(np.count_nonzero(peaks))


def _binned_entropy(v: np.ndarray, bins: int = 10) -> float:
    lo, hi = float(v.min()), float(v.max())
    if hi <= lo:
        return 0.0
    idx = np.minimum(((v - lo) / (hi - lo) * bins).astype(int), bins - 1)
    counts = np.bincount(idx, minlength=bins)
    p = counts[counts > 0] / v.size
    return _finite(-np.sum(p * np.log(p)))


def _trend_slope(v: np.ndarray) -> float:
    t = np.arange(v.size, dtype=np.float64)
    t -= t.mean()
    denom = float(np.dot(t, t))
    return _finite(np.dot(t, v - v.mean()) / denom) if denom else 0.0


def _moment(v: np.ndarray, order: int) -> float:
    std = v.std()
    if std == 0.0:
        return 0.0
    z = (v - v.mean()) / std
    moment = float(np.mean(z**order))
    return _finite(moment - 3.0 if order == 4 else moment)  # excess kurtosis


def _stats_block(v: np.ndarray) -> list[float]:
    mad = float(np.median(np.abs(v - np.median(v))))
    return [
        _finite(v.mean()),
        _finite(v.var()),
        _finite(v.std()),
        _moment(v, 3),
        _moment(v, 4),
        _finite(v.min()),
        _finite(v.max()),
        _finite(v.max() - v.min()),
        _finite(np.median(v)),
        _finite(mad),
        _finite(v[-1] - v[0]),
        _autocorr(v, 1),
        _autocorr(v, 2),
        _autocorr(v, 3),
        _mean_crossings(v),
        _longest_increasing_run(v),
        _peak_count(v),
        _binned_entropy(v),
        _trend_slope(v),
    ]


def _strength(residual: np.ndarray, component_plus_residual: np.ndarray) -> float:
    denom = float(np.var(component_plus_residual))
    if denom <= 0.0:
        return 0.0
    return max(0.0, _finite(1.0 - np.var(residual) / denom))


def _global_block(v: np.ndarray) -> list[float]:
    dec = decompose(v)
    period = float(dec.period or 0)
    std = v.std()
    if std > 0.0:
        within = np.abs(v - v.mean()) <= 3.0 * std
        anomaly_free = float(np.count_nonzero(within)) / v.size
    else:
        anomaly_free = 1.0
    mean = float(v.mean())
    mad = float(np.median(np.abs(v - np.median(v))))
    return [
        period,
        _strength(dec.residual, dec.seasonal + dec.residual),
        _strength(dec.residual, dec.trend + dec.residual),
        anomaly_free,
        _finite(std / abs(mean)) if mean != 0.0 else 0.0,
        _finite(abs(mean) / mad) if mad != 0.0 else 0.0,
    ]


def _transformed_views(v: np.ndarray) -> Iterable[np.ndarray]:
    yield v
    yield sr_saliency(v).scores
    amps = fft_amplitude(v)
    amps[amps <= 1e-12 * amps.max()] = 0.0  # below the FFT rounding floor
    yield amps[1:]  # DC bin excluded; identity.mean already carries it
    yield decompose(v).residual


def extract_features(window: Sequence[float] | np.ndarray) -> FeatureVector:
    """82-dimension feature vector of one window (deterministic, always finite)."""
    v = np.asarray(window, dtype=np.float64)
    if v.size < MIN_WINDOW:
        raise TooShort(f"feature extraction needs at least {MIN_WINDOW} points")
    out: list[float] = []
    for view in _transformed_views(v):
        out.extend(_stats_block(view))
    out.extend(_global_block(v))
    return FeatureVector(np.array(out))


def feature_names() -> list[str]:
    """Stable ordered names matching the extract_features layout."""
    names = [f"{t}.{f}" for t in _TRANSFORM_NAMES for f in _EXTRACTOR_NAMES]
    names.extend(f"global.{g}" for g in _GLOBAL_NAMES)
    return names


def feature_matrix(windows: Iterable[Sequence[float]]) -> np.ndarray:
    """Stack extract_features over many windows into an (n, 82) matrix."""
    return np.array([extract_features(w).values for w in windows], dtype=np.float64)


def write_feature_matrix(path: str | Path, windows: Iterable[Sequence[float]]) -> None:
    """Export a feature matrix as CSV with feature_names() as the header row."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(feature_names())
        for w in windows:
            writer.writerow(repr(x) for x in extract_features(w).values.tolist())
