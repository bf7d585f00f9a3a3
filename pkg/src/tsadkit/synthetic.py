"""Synthetic labeled corpus generation and the on-disk corpus layout.

Three pattern families with deliberately different best-fitting detectors:

* ``seasonal`` -- triangular daily wave plus Gaussian noise with short
  in-range spikes/dips (invisible to a global histogram, sharp cusps
  confuse saliency thresholds, clean after seasonal decomposition);
* ``trend`` -- steep ramp plus heavy-tailed noise with large isolated
  spikes (saliency separates the spikes from noise tails best);
* ``level`` -- flat base plus Gaussian noise with sustained out-of-range
  level shifts (exactly the extremes a histogram isolates).

The corpus directory layout is one ``<series_id>.csv`` per series plus a
``labels.csv`` with rows ``series_id,index,is_anomaly``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import BadSpec
from .series import LabeledSeries, TimeSeries

GRANULARITY = 3600  # hourly points; a day is 24 steps
START_EPOCH = 1_600_000_000
DAILY_PERIOD = 24

# per-family anomaly density multipliers; they average to 1 so the corpus
# aggregate tracks the configured target ratio
_DENSITY = {"seasonal": 0.4, "trend": 0.8, "level": 1.8}


@dataclass(frozen=True)
class CorpusSpec:
    seasonal: int = 30
    trend: int = 30
    level: int = 30
    length: int = 360
    anomaly_ratio: float = 0.075

    def __post_init__(self) -> None:
        if min(self.seasonal, self.trend, self.level) < 0:
            raise BadSpec("family counts must be >= 0")
        if self.length < 64:
            raise BadSpec("series length must be at least 64")
        if not 0.0 < self.anomaly_ratio < 0.3:
            raise BadSpec("anomaly_ratio must be in (0, 0.3)")

    @classmethod
    def from_dict(cls, doc: dict) -> "CorpusSpec":
        known = {f: doc[f] for f in ("seasonal", "trend", "level", "length", "anomaly_ratio") if f in doc}
        unknown = set(doc) - set(known)
        if unknown:
            raise BadSpec(f"unknown corpus spec keys: {sorted(unknown)}")
        return cls(**known)


def _inject_segments(
    rng: np.random.Generator,
    n: int,
    target_points: int,
    seg_len_range: tuple[int, int],
) -> list[tuple[int, int]]:
    """Disjoint anomaly segments (start, length) totaling ~target_points."""
    segments: list[tuple[int, int]] = []
    taken = np.zeros(n, dtype=bool)
    budget = target_points
    attempts = 0
    while budget > 0 and attempts < 200:
        attempts += 1
        length = int(rng.integers(seg_len_range[0], seg_len_range[1] + 1))
        length = min(length, budget) if budget >= seg_len_range[0] else budget
        start = int(rng.integers(2, n - length - 2))
        lo, hi = max(0, start - 3), min(n, start + length + 3)
        if taken[lo:hi].any():
            continue
        taken[start : start + length] = True
        segments.append((start, length))
        budget -= length
    return sorted(segments)


def _triangle(phase: np.ndarray) -> np.ndarray:
    """Triangular wave in [-1, 1] with cusps at the peaks and troughs."""
    return 2.0 * np.abs(2.0 * (phase - np.floor(phase + 0.5))) - 1.0


def _gen_seasonal(rng: np.random.Generator, n: int, ratio: float) -> tuple[np.ndarray, np.ndarray]:
    base = rng.uniform(20.0, 40.0)
    amplitude = rng.uniform(6.0, 12.0)
    sigma = rng.uniform(0.3, 0.6)
    t = np.arange(n)
    values = base + amplitude * _triangle(t / DAILY_PERIOD) + rng.normal(0.0, sigma, n)
    labels = np.zeros(n, dtype=bool)
    for start, length in _inject_segments(rng, n, round(ratio * n), (1, 2)):
        sign = 1.0 if rng.random() < 0.5 else -1.0
        delta = sign * rng.uniform(5.0, 8.0) * sigma
        values[start : start + length] += delta
        labels[start : start + length] = True
    return values, labels


def _gen_trend(rng: np.random.Generator, n: int, ratio: float) -> tuple[np.ndarray, np.ndarray]:
    base = rng.uniform(10.0, 30.0)
    slope = rng.choice([-1.0, 1.0]) * rng.uniform(0.05, 0.15)
    sigma = rng.uniform(0.4, 0.7)
    t = np.arange(n)
    noise = sigma * rng.standard_t(3, n)  # heavy tails: ESD sees spurious outliers
    values = base + slope * t + noise
    labels = np.zeros(n, dtype=bool)
    for start, length in _inject_segments(rng, n, round(ratio * n), (1, 3)):
        sign = 1.0 if rng.random() < 0.5 else -1.0
        delta = sign * rng.uniform(12.0, 18.0) * sigma
        values[start : start + length] += delta
        labels[start : start + length] = True
    return values, labels


def _gen_level(rng: np.random.Generator, n: int, ratio: float) -> tuple[np.ndarray, np.ndarray]:
    base = rng.uniform(20.0, 40.0)
    sigma = rng.uniform(0.4, 0.8)
    values = base + rng.normal(0.0, sigma, n)
    labels = np.zeros(n, dtype=bool)
    # plateaus long enough that a robust trend partially absorbs them: the
    # histogram detector keeps the edge over the decomposition-based one
    for start, length in _inject_segments(rng, n, round(ratio * n), (8, 16)):
        sign = 1.0 if rng.random() < 0.5 else -1.0
        delta = sign * rng.uniform(8.0, 12.0) * sigma
        values[start : start + length] += delta
        labels[start : start + length] = True
    return values, labels


_GENERATORS = {"seasonal": _gen_seasonal, "trend": _gen_trend, "level": _gen_level}


def gen_corpus(spec: CorpusSpec, seed: int) -> list[LabeledSeries]:
    """Deterministic labeled corpus; ground truth is the injected indices."""
    rng = np.random.default_rng(seed)
    corpus: list[LabeledSeries] = []
    for family in ("seasonal", "trend", "level"):
        count = getattr(spec, family)
        family_ratio = spec.anomaly_ratio * _DENSITY[family]
        for i in range(count):
            values, labels = _GENERATORS[family](rng, spec.length, family_ratio)
            ts = TimeSeries(
                START_EPOCH + GRANULARITY * np.arange(spec.length, dtype=np.int64),
                values,
                GRANULARITY,
            )
            corpus.append(LabeledSeries(ts, labels, f"{family}_{i:03d}"))
    return corpus


def save_corpus(corpus: list[LabeledSeries], directory: str | Path) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    label_rows = []
    for item in corpus:
        with open(directory / f"{item.series_id}.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["timestamp", "value"])
            for t, v in zip(item.series.timestamps.tolist(), item.series.values.tolist()):
                writer.writerow([t, repr(v)])
        for idx in np.flatnonzero(item.labels):
            label_rows.append((item.series_id, int(idx), 1))
    with open(directory / "labels.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["series_id", "index", "is_anomaly"])
        writer.writerows(label_rows)


def load_corpus(directory: str | Path) -> list[LabeledSeries]:
    from .series import load_csv  # local import avoids a cycle at module load

    directory = Path(directory)
    labels_path = directory / "labels.csv"
    label_map: dict[str, list[tuple[int, bool]]] = {}
    if labels_path.exists():
        with open(labels_path, newline="") as fh:
            for row in csv.DictReader(fh):
                label_map.setdefault(row["series_id"], []).append(
                    (int(row["index"]), bool(int(row["is_anomaly"])))
                )
    corpus = []
    for path in sorted(directory.glob("*.csv")):
        if path.name == "labels.csv":
            continue
        series = load_csv(path)
        labels = np.zeros(len(series), dtype=bool)
        for idx, flag in label_map.get(path.stem, []):
            labels[idx] = flag
        corpus.append(LabeledSeries(series, labels, path.stem))
    return corpus
