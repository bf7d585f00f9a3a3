"""The three candidate unsupervised detectors behind one common interface.

Each detector exposes exactly one key hyper-parameter:

* spectral residual -- saliency threshold tau in (0, inf)
* histogram outlier score -- probability threshold theta in (0, 1]
* seasonal-hybrid ESD -- max anomaly ratio r in [0, 0.49]
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import stats

from .errors import ParamOutOfRange, TooShort
from .series import TimeSeries
from .transforms import decompose, sr_saliency

ESD_SIGNIFICANCE = 0.05
MAD_TO_SIGMA = 1.4826  # normal-consistency constant for median absolute deviation


class DetectorKind(str, Enum):
    SR = "sr"
    HBOS = "hbos"
    SHESD = "shesd"

    def __str__(self) -> str:  # pragma: no cover - repr convenience
        return self.value


DEFAULT_PARAMS: dict[DetectorKind, float] = {
    DetectorKind.SR: 2.0,
    DetectorKind.HBOS: 0.99,
    DetectorKind.SHESD: 0.01,
}

_GRIDS: dict[DetectorKind, tuple[float, ...]] = {
    DetectorKind.SR: (0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 4.0, 5.0, 6.0),
    DetectorKind.HBOS: (0.90, 0.95, 0.97, 0.99, 0.995, 0.999),
    DetectorKind.SHESD: (0.005, 0.01, 0.02, 0.05, 0.10, 0.15, 0.20),
}

_RANGES: dict[DetectorKind, tuple[float, float, bool]] = {
    # (low, high, low_exclusive)
    DetectorKind.SR: (0.0, float("inf"), True),
    DetectorKind.HBOS: (0.0, 1.0, True),
    DetectorKind.SHESD: (0.0, 0.49, False),
}


@dataclass(frozen=True)
class DetectorParams:
    kind: DetectorKind
    value: float

    def __post_init__(self) -> None:
        validate_param(self.kind, self.value)


@dataclass(frozen=True)
class DetectionOutput:
    labels: np.ndarray
    scores: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "labels", np.asarray(self.labels, dtype=bool))
        object.__setattr__(self, "scores", np.asarray(self.scores, dtype=np.float64))
        assert self.labels.shape == self.scores.shape


def validate_param(kind: DetectorKind, value: float) -> None:
    low, high, low_exclusive = _RANGES[kind]
    ok = (value > low if low_exclusive else value >= low) and value <= high
    if not (np.isfinite(value) or (kind is DetectorKind.SR and value == float("inf"))) or not ok:
        raise ParamOutOfRange(f"{kind.value} parameter {value} outside its legal range")


def param_grid(kind: DetectorKind) -> list[float]:
    """Fixed candidate values searched when building training labels."""
    return list(_GRIDS[kind])


def clamp_param(kind: DetectorKind, value: float) -> float:
    """Clamp an estimated parameter into [min(grid), max(grid)]."""
    grid = _GRIDS[kind]
    return float(min(max(value, grid[0]), grid[-1]))


def default_params(kind: DetectorKind) -> DetectorParams:
    return DetectorParams(kind, DEFAULT_PARAMS[kind])


def sr_detect(values: np.ndarray, threshold: float) -> DetectionOutput:
    """Label points whose spectral-residual saliency score exceeds the threshold."""
    validate_param(DetectorKind.SR, threshold)
    scores = sr_saliency(np.asarray(values, dtype=np.float64)).scores
    return DetectionOutput(scores > threshold, scores)


def hbos_detect(
    values: np.ndarray,
    threshold: float,
    use_diff_feature: bool = True,
) -> DetectionOutput:
    """Histogram-based outlier probabilities with a rank calibration.

    Two per-point features (value and first difference with 0 prepended) are
    binned into ceil(sqrt(n)) static-width histograms; the outlier score sums
    log(max_height / height) over features and is mapped to a probability by
    average rank. A point is anomalous when its probability exceeds theta.
    """
    validate_param(DetectorKind.HBOS, threshold)
    v = np.asarray(values, dtype=np.float64)
    n = v.size
    if n < 8:
        raise TooShort("hbos needs at least 8 points")
    feats = [v]
    if use_diff_feature:
        feats.append(np.concatenate([[0.0], np.diff(v)]))

    n_bins = int(np.ceil(np.sqrt(n)))
    score = np.zeros(n)
    for feat in feats:
        lo, hi = float(feat.min()), float(feat.max())
        if hi == lo:
            continue  # single effective bin: identical height everywhere
        # static-width bins over the observed range; top edge closed
        idx = np.minimum((((feat - lo) / (hi - lo)) * n_bins).astype(int), n_bins - 1)
        heights = np.bincount(idx, minlength=n_bins).astype(np.float64)
        heights = np.maximum(heights, 0.5)
        score += np.log(heights.max() / heights[idx])

    prob = stats.rankdata(score, method="average") / n
    return DetectionOutput(prob > threshold, prob)


def _generalized_esd(residual: np.ndarray, max_outliers: int, significance: float) -> list[int]:
    """Two-sided generalized ESD with median/MAD (hybrid) deviations."""
    x = residual.astype(np.float64).copy()
    n = x.size
    active = np.ones(n, dtype=bool)
    candidates: list[int] = []
    test_stats: list[float] = []
    for i in range(1, max_outliers + 1):
        vals = x[active]
        med = np.median(vals)
        mad = np.median(np.abs(vals - med)) * MAD_TO_SIGMA
        if mad <= 0.0:
            break
        dev = np.where(active, np.abs(x - med), -np.inf)
        worst = int(np.argmax(dev))
        test_stats.append(dev[worst] / mad)
        candidates.append(worst)
        active[worst] = False

    n_outliers = 0
    for i, stat in enumerate(test_stats, start=1):
        p = 1.0 - significance / (2.0 * (n - i + 1))
        t_crit = stats.t.ppf(p, n - i - 1)
        lam = (n - i) * t_crit / np.sqrt((n - i - 1 + t_crit**2) * (n - i + 1))
        if stat > lam:
            n_outliers = i
    return candidates[:n_outliers]


def shesd_detect(series: TimeSeries | np.ndarray, max_ratio: float) -> DetectionOutput:
    """Generalized ESD on the robustly de-trended, de-seasonalized residual."""
    validate_param(DetectorKind.SHESD, max_ratio)
    dec = decompose(series)
    residual = dec.residual
    n = residual.size
    min_len = 2 * dec.period if dec.period else 8
    if n < min_len:
        raise TooShort(f"shesd needs at least {min_len} points")
    labels = np.zeros(n, dtype=bool)
    budget = int(max_ratio * n)
    if budget > 0:
        labels[_generalized_esd(residual, budget, ESD_SIGNIFICANCE)] = True

    med = np.median(residual)
    mad = np.median(np.abs(residual - med)) * MAD_TO_SIGMA
    scores = np.abs(residual - med) / (mad if mad > 0 else 1.0)
    return DetectionOutput(labels, scores)


def detect(series: TimeSeries | np.ndarray, params: DetectorParams) -> DetectionOutput:
    """Dispatch to the detector selected by ``params.kind``."""
    values = series.values if isinstance(series, TimeSeries) else np.asarray(series, dtype=np.float64)
    if params.kind is DetectorKind.SR:
        return sr_detect(values, params.value)
    if params.kind is DetectorKind.HBOS:
        return hbos_detect(values, params.value)
    return shesd_detect(series, params.value)
