"""Signal transformations: FFT amplitude, spectral-residual saliency,
period detection and robust trend/seasonal/residual decomposition."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import TooShort
from .series import DEFAULT_WINDOW, TimeSeries

EPS = 1e-8
SR_FILTER_WIDTH = 3  # q: moving-average width on the log spectrum
SR_EXTENSION = 5  # z: estimated points appended before the transform
SR_LOOKBACK = 5  # points used for the linear extrapolation
ACF_THRESHOLD = 0.5  # minimum autocorrelation to call a lag a period

_DAY = 86400
_WEEK = 7 * _DAY


@dataclass(frozen=True)
class Decomposition:
    """Additive split v = trend + seasonal + residual (exact by construction)."""

    trend: np.ndarray
    seasonal: np.ndarray
    residual: np.ndarray
    period: int | None

    def reconstruct(self) -> np.ndarray:
        return self.trend + self.seasonal + self.residual


@dataclass(frozen=True)
class SaliencyMap:
    """Non-negative per-point saliency scores; higher means more anomalous."""

    scores: np.ndarray


def fft_amplitude(v: np.ndarray) -> np.ndarray:
    """|DFT(v)| over the full spectrum, unnormalized forward transform."""
    v = np.asarray(v, dtype=np.float64)
    if v.size < 2:
        raise TooShort("fft_amplitude needs at least 2 points")
    return np.abs(np.fft.fft(v))


def _trailing_mean(x: np.ndarray, width: int) -> np.ndarray:
    """Mean over the trailing ``width`` points (window shrinks at the head)."""
    csum = np.cumsum(x, dtype=np.float64)
    out = np.empty_like(csum)
    out[:width] = csum[:width] / np.arange(1, min(width, x.size) + 1)
    if x.size > width:
        out[width:] = (csum[width:] - csum[:-width]) / width
    return out


def _extend_estimate(v: np.ndarray) -> float:
    """Value for the appended points: linear extrapolation from the tail."""
    m = min(SR_LOOKBACK, v.size - 1)
    if m < 1:
        return float(v[-1])
    steps = np.arange(1, m + 1, dtype=np.float64)
    grads = (v[-1] - v[-1 - m : -1][::-1]) / steps
    return float(v[-m] + grads.mean() * m)


def sr_saliency(
    v: np.ndarray,
    q: int = SR_FILTER_WIDTH,
    z: int = SR_EXTENSION,
) -> SaliencyMap:
    """Spectral-residual saliency with local-mean score normalization.

    The series is extended by ``z`` extrapolated points, the residual of the
    log-amplitude spectrum is mapped back to the time domain, and each point
    is scored against the mean saliency of the ``q`` points preceding it.
    """
    v = np.asarray(v, dtype=np.float64)
    if v.size < q:
        raise TooShort(f"sr_saliency needs at least q={q} points")
    extended = np.concatenate([v, np.full(z, _extend_estimate(v))]) if z > 0 else v

    spectrum = np.fft.fft(extended)
    amplitude = np.abs(spectrum)
    phase = np.angle(spectrum)
    dead = amplitude <= EPS  # bins with no signal carry junk phases
    log_amp = np.log(np.maximum(amplitude, EPS))
    residual = log_amp - _trailing_mean(log_amp, q)
    restored = np.where(dead, 0.0, np.exp(residual + 1j * phase))
    saliency = np.abs(np.fft.ifft(restored))[: v.size]

    local = np.empty_like(saliency)
    local[0] = saliency[0]
    local[1:] = _trailing_mean(saliency, q)[:-1]
    scores = (saliency - local) / np.maximum(local, EPS)
    # relative scores this far below the smallest usable threshold are float
    # dust (flat saliency); zero them so degenerate inputs score exactly 0
    scores[(saliency <= EPS) | (np.abs(scores) < 1e-9)] = 0.0
    return SaliencyMap(np.maximum(scores, 0.0))


def _acf(values: np.ndarray) -> np.ndarray:
    """Autocorrelation for lags 0..n-1 (biased estimator, global mean)."""
    x = values - values.mean()
    denom = float(np.dot(x, x))
    if denom <= 0.0:
        return np.zeros(values.size)
    full = np.correlate(x, x, mode="full")[values.size - 1 :]
    return full / denom


def detect_period(
    series: TimeSeries | np.ndarray,
    granularity: int | None = None,
    acf_threshold: float = ACF_THRESHOLD,
) -> int | None:
    """Dominant period as the best autocorrelation lag, or None when aperiodic.

    Calendar periods implied by the granularity (day, week) are tried first;
    otherwise the ACF-maximizing local-maximum lag with ACF >= threshold wins.
    """
    if isinstance(series, TimeSeries):
        values = series.values
        granularity = series.granularity
    else:
        values = np.asarray(series, dtype=np.float64)
    n = values.size
    if n < 4:
        raise TooShort("detect_period needs at least 4 points")
    acf = _acf(values)
    max_lag = n // 2
    if np.all(acf == 0.0):
        return None

    if granularity:
        for span in (_DAY, _WEEK):
            if span % granularity == 0:
                lag = span // granularity
                if 2 <= lag <= max_lag and acf[lag] >= acf_threshold:
                    return int(lag)

    best: int | None = None
    for lag in range(2, max_lag + 1):
        if acf[lag] < acf_threshold:
            continue
        left_ok = acf[lag] >= acf[lag - 1]
        right_ok = lag + 1 >= acf.size or acf[lag] >= acf[lag + 1]
        if left_ok and right_ok and (best is None or acf[lag] > acf[best]):
            best = lag
    return best


def moving_median(v: np.ndarray, window: int) -> np.ndarray:
    """Centered moving median; near the edges the window slides inward so it
    keeps its full length (a shrunk window would no longer span a whole
    period on seasonal input, biasing the trend at the boundaries)."""
    n = v.size
    if window >= n:
        return np.full(n, np.median(v))
    half_left = (window - 1) // 2
    out = np.empty(n)
    for i in range(n):
        lo = min(max(0, i - half_left), n - window)
        out[i] = np.median(v[lo : lo + window])
    return out


def decompose(
    series: TimeSeries | np.ndarray,
    granularity: int | None = None,
    period: int | None = None,
    default_trend_window: int = DEFAULT_WINDOW,
) -> Decomposition:
    """Robust additive decomposition used by S-H-ESD and result tuning.

    Trend is a centered moving median (window = detected period, or
    min(default_trend_window, n/4) when aperiodic); the seasonal component is
    the mean-centered per-phase median of the detrended values.
    """
    if isinstance(series, TimeSeries):
        values = series.values
        granularity = series.granularity
    else:
        values = np.asarray(series, dtype=np.float64)
    n = values.size
    if n < 4:
        raise TooShort("decompose needs at least 4 points")
    if period is None:
        period = detect_period(values, granularity)

    window = period if period else max(1, min(default_trend_window, n // 4))
    trend = moving_median(values, window)
    detrended = values - trend

    if period:
        phase = np.array([np.median(detrended[k::period]) for k in range(period)])
        phase -= phase.mean()
        seasonal = np.tile(phase, n // period + 1)[:n]
    else:
        seasonal = np.zeros(n)

    residual = values - trend - seasonal
    return Decomposition(trend, seasonal, residual, period)
