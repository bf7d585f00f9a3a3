"""Segment-based delayed evaluation protocol, corpus splitting and the
benchmark runner comparing fixed-parameter detectors against auto-selection."""

from __future__ import annotations

import json
import random
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .errors import LengthMismatch, TooFew
from .series import LabeledSeries

DEFAULT_DELAY = 1  # detection within k points of a segment start counts


@dataclass(frozen=True)
class Segment:
    """Maximal run of consecutive true labels, inclusive on both ends."""

    start: int
    end: int

    def __post_init__(self) -> None:
        assert self.start <= self.end


def truth_segments(truth: np.ndarray) -> list[Segment]:
    truth = np.asarray(truth, dtype=bool)
    segments = []
    start = None
    for i, flag in enumerate(truth):
        if flag and start is None:
            start = i
        elif not flag and start is not None:
            segments.append(Segment(start, i - 1))
            start = None
    if start is not None:
        segments.append(Segment(start, len(truth) - 1))
    return segments


def adjust_predictions(pred: np.ndarray, truth: np.ndarray, k: int = DEFAULT_DELAY) -> np.ndarray:
    """Credit a whole truth segment when detected within ``k`` of its start.

    Inside each truth segment [s, e]: if any prediction is true at an index
    i with s <= i <= min(s + k, e) the segment becomes all true, otherwise
    all false. Predictions outside truth segments are left untouched.
    """
    pred = np.asarray(pred, dtype=bool)
    truth = np.asarray(truth, dtype=bool)
    if pred.shape != truth.shape:
        raise LengthMismatch("pred and truth must have equal length")
    adjusted = pred.copy()
    for seg in truth_segments(truth):
        hit = bool(pred[seg.start : min(seg.start + k, seg.end) + 1].any())
        adjusted[seg.start : seg.end + 1] = hit
    return adjusted


def confusion_counts(pred: np.ndarray, truth: np.ndarray) -> tuple[int, int, int]:
    pred = np.asarray(pred, dtype=bool)
    truth = np.asarray(truth, dtype=bool)
    if pred.shape != truth.shape:
        raise LengthMismatch("pred and truth must have equal length")
    tp = int(np.count_nonzero(pred & truth))
    fp = int(np.count_nonzero(pred & ~truth))
    fn = int(np.count_nonzero(~pred & truth))
    return tp, fp, fn


def prf_from_counts(tp: int, fp: int, fn: int) -> tuple[float, float, float]:
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1


def prf(adjusted: np.ndarray, truth: np.ndarray) -> tuple[float, float, float]:
    """Pointwise precision/recall/F1 with the 0/0 -> 0 convention."""
    return prf_from_counts(*confusion_counts(adjusted, truth))


def adjusted_f1(pred: np.ndarray, truth: np.ndarray, k: int = DEFAULT_DELAY) -> float:
    return prf(adjust_predictions(pred, truth, k), truth)[2]


def split_corpus(
    corpus: Sequence[LabeledSeries], seed: int
) -> tuple[list[LabeledSeries], list[LabeledSeries]]:
    """Deterministic shuffled 3:1 split (train gets ceil(3n/4) series)."""
    if len(corpus) < 4:
        raise TooFew(f"need at least 4 series to split 3:1, got {len(corpus)}")
    order = list(range(len(corpus)))
    random.Random(seed).shuffle(order)
    n_train = -(-3 * len(corpus) // 4)  # ceil
    train = [corpus[i] for i in order[:n_train]]
    test = [corpus[i] for i in order[n_train:]]
    return train, test


@dataclass
class ReportRow:
    model: str
    mode: str
    f1: float
    precision: float
    recall: float
    macro_f1: float
    tp: int
    fp: int
    fn: int


@dataclass
class EvalReport:
    """Benchmark rows: pooled (micro) counts per model plus macro means."""

    mode: str
    rows: list[ReportRow] = field(default_factory=list)
    per_series: dict[str, dict[str, float]] = field(default_factory=dict)

    def row(self, model: str) -> ReportRow:
        matches = [r for r in self.rows if r.model == model]
        if not matches:
            raise KeyError(model)
        return matches[0]

    def to_json(self) -> str:
        return json.dumps(
            {
                "mode": self.mode,
                "rows": [asdict(r) for r in self.rows],
                "per_series": self.per_series,
            },
            sort_keys=True,
            indent=2,
        )

    def to_text(self) -> str:
        lines = [f"{'model':<14} {'f1':>8} {'precision':>10} {'recall':>8}  ({self.mode})"]
        for r in self.rows:
            lines.append(f"{r.model:<14} {r.f1:>8.4f} {r.precision:>10.4f} {r.recall:>8.4f}")
        return "\n".join(lines)


class MicroMacroAccumulator:
    """Pools confusion counts across series and tracks per-series F1."""

    def __init__(self) -> None:
        self.tp = self.fp = self.fn = 0
        self.per_series_f1: list[float] = []

    def add(self, pred: np.ndarray, truth: np.ndarray, k: int = DEFAULT_DELAY) -> None:
        adjusted = adjust_predictions(pred, truth, k)
        tp, fp, fn = confusion_counts(adjusted, truth)
        self.tp += tp
        self.fp += fp
        self.fn += fn
        self.per_series_f1.append(prf_from_counts(tp, fp, fn)[2])

    def row(self, model: str, mode: str) -> ReportRow:
        precision, recall, f1 = prf_from_counts(self.tp, self.fp, self.fn)
        macro = float(np.mean(self.per_series_f1)) if self.per_series_f1 else 0.0
        return ReportRow(model, mode, f1, precision, recall, macro, self.tp, self.fp, self.fn)
