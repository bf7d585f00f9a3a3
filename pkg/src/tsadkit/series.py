"""Canonical time-series representation, validation and windowing.

Every other module consumes ``TimeSeries`` produced by :func:`validate`.
Timestamps are integer epoch seconds on a uniform grid; all detection
algorithms operate on the value vector only.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    EmptyInput,
    IrregularGranularity,
    LengthMismatch,
    NonFiniteValue,
    SeriesTooShort,
)

DEFAULT_WINDOW = 29  # points visible when scoring the latest one
DEFAULT_GRANULARITY = 60  # assumed spacing (seconds) for single-point series
MAX_IRREGULAR_GAP_RATIO = 0.05  # beyond this share of deviating gaps we give up


@dataclass(frozen=True)
class TimeSeries:
    """Uniformly spaced series of finite values.

    ``repaired_indices`` records positions whose values were filled in by
    :func:`validate` (missing grid points or non-finite inputs).
    """

    timestamps: np.ndarray
    values: np.ndarray
    granularity: int
    repaired_indices: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "timestamps", np.asarray(self.timestamps, dtype=np.int64))
        object.__setattr__(self, "values", np.asarray(self.values, dtype=np.float64))
        self.timestamps.setflags(write=False)
        self.values.setflags(write=False)
        if len(self.timestamps) == 0:
            raise EmptyInput("series must contain at least one point")
        if len(self.timestamps) != len(self.values):
            raise LengthMismatch("timestamps and values must have equal length")
        if self.granularity <= 0:
            raise IrregularGranularity(f"granularity must be positive, got {self.granularity}")
        if not np.all(np.isfinite(self.values)):
            raise NonFiniteValue("values contain NaN/Inf after validation")
        gaps = np.diff(self.timestamps)
        if gaps.size and not np.all(gaps == self.granularity):
            raise IrregularGranularity("consecutive gaps must all equal the granularity")

    def __len__(self) -> int:
        return len(self.values)

    @property
    def points(self) -> list[tuple[int, float]]:
        return list(zip(self.timestamps.tolist(), self.values.tolist()))


@dataclass(frozen=True)
class Window:
    """A fixed-length view over a parent series; the last index is the point scored."""

    parent: TimeSeries
    start_index: int
    length: int

    def __post_init__(self) -> None:
        if self.start_index < 0 or self.start_index + self.length > len(self.parent):
            raise SeriesTooShort(
                f"window [{self.start_index}, {self.start_index + self.length}) "
                f"exceeds series of length {len(self.parent)}"
            )

    @property
    def values(self) -> np.ndarray:
        return self.parent.values[self.start_index : self.start_index + self.length]

    @property
    def last_index(self) -> int:
        return self.start_index + self.length - 1


@dataclass(frozen=True)
class LabeledSeries:
    """A series with per-point ground-truth anomaly labels."""

    series: TimeSeries
    labels: np.ndarray
    series_id: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "labels", np.asarray(self.labels, dtype=bool))
        if len(self.labels) != len(self.series):
            raise LengthMismatch("labels length must equal series length")


def validate(
    raw_points: Iterable[tuple[float, float]],
    default_granularity: int = DEFAULT_GRANULARITY,
) -> TimeSeries:
    """Turn raw (timestamp, value) pairs into a valid :class:`TimeSeries`.

    Points are sorted; duplicate timestamps keep their first occurrence and
    non-finite values are dropped. Holes left by dropped points or missing
    grid timestamps are repaired by linear interpolation as long as no more
    than 5% of the gaps deviate from the dominant granularity.
    """
    pts = sorted((int(t), float(v)) for t, v in raw_points)
    if not pts:
        raise EmptyInput("no input points")

    seen: set[int] = set()
    stamps: list[int] = []
    vals: list[float] = []
    for t, v in pts:
        if t in seen:
            continue
        seen.add(t)
        stamps.append(t)
        vals.append(v)

    all_ts = np.array(stamps, dtype=np.int64)
    va = np.array(vals, dtype=np.float64)
    finite = np.isfinite(va)
    ts = all_ts[finite]
    if ts.size == 0:
        raise NonFiniteValue("all input values are non-finite")
    if ts[0] != all_ts[0] or ts[-1] != all_ts[-1]:
        raise NonFiniteValue("non-finite value at series boundary cannot be interpolated")
    if all_ts.size == 1:
        return TimeSeries(ts, va[finite], default_granularity)

    # granularity comes from the full timestamp set: a NaN row still marks
    # a valid grid slot, only its value is missing
    gaps = np.diff(all_ts)
    granularity = int(Counter(gaps.tolist()).most_common(1)[0][0])
    if granularity <= 0:
        raise IrregularGranularity("could not infer a positive granularity")
    deviating = int(np.count_nonzero(gaps != granularity))
    if deviating > MAX_IRREGULAR_GAP_RATIO * gaps.size:
        raise IrregularGranularity(
            f"{deviating} of {gaps.size} gaps deviate from granularity {granularity}s"
        )
    if np.any(gaps % granularity != 0):
        raise IrregularGranularity("deviating timestamps do not sit on the series grid")

    grid = np.arange(all_ts[0], all_ts[-1] + granularity, granularity, dtype=np.int64)
    filled = np.interp(grid, ts, va[finite])
    present = np.isin(grid, ts)
    repaired = tuple(int(i) for i in np.flatnonzero(~present))
    return TimeSeries(grid, filled, granularity, repaired)


def windows(series: TimeSeries, omega: int = DEFAULT_WINDOW) -> list[Window]:
    """All sliding windows of size ``omega`` with stride 1 (n - omega + 1 of them)."""
    if omega <= 0:
        raise SeriesTooShort(f"window size must be positive, got {omega}")
    n = len(series)
    if n < omega:
        raise SeriesTooShort(f"series of length {n} is shorter than window {omega}")
    return [Window(series, start, omega) for start in range(n - omega + 1)]


def last_window_values(series: TimeSeries, omega: int = DEFAULT_WINDOW) -> np.ndarray:
    """Values of the most recent full window (the one scoring the latest point)."""
    if len(series) < omega:
        raise SeriesTooShort(f"series of length {len(series)} is shorter than window {omega}")
    return series.values[-omega:]


def _parse_timestamp(token: str) -> int:
    token = token.strip()
    try:
        return int(float(token))
    except ValueError:
        pass
    try:
        dt = datetime.fromisoformat(token.replace("Z", "+00:00"))
    except ValueError as exc:
        raise IrregularGranularity(f"unparseable timestamp {token!r}") from exc
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return int(dt.timestamp())


def parse_points_csv(text: str) -> list[tuple[int, float]]:
    """Parse ``timestamp,value`` rows; the header line is optional."""
    points: list[tuple[int, float]] = []
    for lineno, line in enumerate(text.splitlines()):
        line = line.strip()
        if not line:
            continue
        cells = line.split(",")
        if len(cells) < 2:
            raise EmptyInput(f"line {lineno + 1}: expected 'timestamp,value'")
        if lineno == 0 and not _looks_numeric(cells[1]):
            continue  # header row
        points.append((_parse_timestamp(cells[0]), float(cells[1])))
    if not points:
        raise EmptyInput("CSV contained no data rows")
    return points


def _looks_numeric(token: str) -> bool:
    try:
        float(token.strip())
        return True
    except ValueError:
        return token.strip().lower() in ("nan", "inf", "-inf")


def load_csv(path: str | Path) -> TimeSeries:
    return validate(parse_points_csv(Path(path).read_text()))


def parse_points_json(text: str) -> list[tuple[int, float]]:
    """Parse ``{"series": [{"timestamp": ..., "value": ...}, ...]}``."""
    doc = json.loads(text)
    rows = doc.get("series") if isinstance(doc, dict) else None
    if not rows:
        raise EmptyInput("JSON document has no 'series' entries")
    points = []
    for row in rows:
        t = row["timestamp"]
        points.append((_parse_timestamp(str(t)) if isinstance(t, str) else int(t), float(row["value"])))
    return points


def load_json(path: str | Path) -> TimeSeries:
    return validate(parse_points_json(Path(path).read_text()))


def series_from_values(
    values: Sequence[float] | np.ndarray,
    granularity: int = DEFAULT_GRANULARITY,
    start: int = 0,
) -> TimeSeries:
    """Convenience constructor for already-regular value vectors."""
    values = np.asarray(values, dtype=np.float64)
    ts = start + granularity * np.arange(len(values), dtype=np.int64)
    return TimeSeries(ts, values, granularity)
