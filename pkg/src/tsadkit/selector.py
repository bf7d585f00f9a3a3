"""Automatic detector selection: training-label generation, the multi-class
selector with heuristic fallback, per-detector parameter estimators, and the
persisted bundle served online.

Training labels are the per-series exhaustive best (detector, parameter)
pair under the segment-adjusted F1; the classifier learns the detector kind
from window features and one regressor per kind learns its parameter.
"""

from __future__ import annotations

import hashlib
import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .detectors import (
    DEFAULT_PARAMS,
    DetectorKind,
    DetectorParams,
    clamp_param,
    detect,
    param_grid,
)
from .errors import CorruptBundle, DegenerateData, SchemaMismatch, TooShort
from .evaluation import DEFAULT_DELAY, MicroMacroAccumulator, adjusted_f1, split_corpus
from .features import FeatureVector, extract_features, feature_names
from .gbdt import GBDTClassifier, GBDTConfig, GBDTRegressor
from .series import DEFAULT_WINDOW, LabeledSeries, TimeSeries, last_window_values
from .transforms import detect_period

logger = logging.getLogger(__name__)

BUNDLE_MAGIC = b"ADSB1"
BUNDLE_VERSION = 1
DEFAULT_CONFIDENCE_FLOOR = 0.5
_KIND_ORDER = (DetectorKind.SR, DetectorKind.HBOS, DetectorKind.SHESD)  # tie-break order


@dataclass(frozen=True)
class TrainingLabel:
    series_id: str
    best_kind: DetectorKind
    best_param: float
    best_f1: float


@dataclass(frozen=True)
class DetectorChoice:
    kind: DetectorKind
    param: float
    confidence: float
    source: str  # "classifier" or "heuristic"

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "param": self.param,
            "confidence": self.confidence,
            "source": self.source,
        }


@dataclass
class ParamEstimator:
    """Regression model for one detector kind, clamped to the legal grid range."""

    kind: DetectorKind
    constant: float
    model: GBDTRegressor | None = None

    def predict_one(self, features: np.ndarray) -> float:
        raw = self.constant if self.model is None else float(self.model.predict(features[None, :])[0])
        return clamp_param(self.kind, raw)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "constant": self.constant,
            "model": None if self.model is None else self.model.to_dict(),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ParamEstimator":
        model = None if doc["model"] is None else GBDTRegressor.from_dict(doc["model"])
        return cls(DetectorKind(doc["kind"]), float(doc["constant"]), model)


@dataclass
class SelectorBundle:
    classifier: GBDTClassifier
    estimators: dict[DetectorKind, ParamEstimator]
    confidence_floor: float
    feature_schema: list[str]
    version: int = BUNDLE_VERSION
    metadata: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        missing = [k.value for k in DetectorKind if k not in self.estimators]
        if missing:
            raise SchemaMismatch(f"bundle is missing estimators for: {missing}")
        if self.feature_schema != feature_names():
            raise SchemaMismatch("bundle feature schema does not match the extractor layout")


def build_training_labels(
    corpus: list[LabeledSeries],
    omega: int = DEFAULT_WINDOW,
    delay: int = DEFAULT_DELAY,
) -> list[TrainingLabel]:
    """Exhaustive (kind, grid value) search per series; argmax F1 wins.

    Ties break by the fixed kind order sr < hbos < shesd, then by the
    smaller parameter index. Series where no pair scores above zero get the
    heuristic's choice at its default parameter. Too-short series are
    skipped (counted in a warning).
    """
    labels: list[TrainingLabel] = []
    skipped = 0
    for item in corpus:
        if len(item.series) < omega:
            skipped += 1
            continue
        best: tuple[float, DetectorKind, float] | None = None
        for kind in _KIND_ORDER:
            for value in param_grid(kind):
                try:
                    output = detect(item.series, DetectorParams(kind, value))
                except TooShort:
                    continue
                f1 = adjusted_f1(output.labels, item.labels, delay)
                if best is None or f1 > best[0]:
                    best = (f1, kind, value)
        if best is None or best[0] <= 0.0:
            fallback = heuristic_select(item.series)
            labels.append(TrainingLabel(item.series_id, fallback.kind, fallback.param, 0.0))
        else:
            labels.append(TrainingLabel(item.series_id, best[1], best[2], best[0]))
    if skipped:
        logger.warning("build_training_labels skipped %d series shorter than %d", skipped, omega)
    return labels


def train_gbdt_classifier(X: np.ndarray, y: list[str], config: GBDTConfig) -> GBDTClassifier:
    return GBDTClassifier(config).fit(X, y)


def train_param_estimator(
    X: np.ndarray,
    targets: np.ndarray,
    kind: DetectorKind,
    config: GBDTConfig,
) -> ParamEstimator:
    """Boosted regressor for the kind's parameter; constant default below 5 samples."""
    targets = np.asarray(targets, dtype=np.float64)
    if targets.size < 5:
        return ParamEstimator(kind, DEFAULT_PARAMS[kind])
    model = GBDTRegressor(config).fit(np.asarray(X, dtype=np.float64), targets)
    return ParamEstimator(kind, DEFAULT_PARAMS[kind], model)


def heuristic_select(series: TimeSeries) -> DetectorChoice:
    """Fallback rule: seasonal series go to S-H-ESD, everything else to SR."""
    try:
        period = detect_period(series)
    except TooShort:
        period = None
    kind = DetectorKind.SHESD if period else DetectorKind.SR
    return DetectorChoice(kind, DEFAULT_PARAMS[kind], 0.0, "heuristic")


def select(bundle: SelectorBundle, features: FeatureVector, series: TimeSeries) -> DetectorChoice:
    """Classifier choice when confident, heuristic fallback otherwise."""
    if features.values.shape != (len(bundle.feature_schema),):
        raise SchemaMismatch("feature vector does not match the bundle schema")
    proba = bundle.classifier.predict_proba(features.values[None, :])[0]
    confidence = float(proba.max())
    if confidence < bundle.confidence_floor:
        return heuristic_select(series)
    kind = DetectorKind(bundle.classifier.classes_[int(proba.argmax())])
    param = bundle.estimators[kind].predict_one(features.values)
    return DetectorChoice(kind, param, confidence, "classifier")


def select_for_series(
    bundle: SelectorBundle | None,
    series: TimeSeries,
    omega: int = DEFAULT_WINDOW,
) -> DetectorChoice:
    """Total selection: heuristic when no bundle or the series is too short."""
    if bundle is None or len(series) < omega:
        return heuristic_select(series)
    return select(bundle, extract_features(last_window_values(series, omega)), series)


def save_bundle(bundle: SelectorBundle, path: str | Path) -> None:
    doc = {
        "version": bundle.version,
        "confidence_floor": bundle.confidence_floor,
        "feature_schema": bundle.feature_schema,
        "classifier": bundle.classifier.to_dict(),
        "estimators": {k.value: est.to_dict() for k, est in bundle.estimators.items()},
        "metadata": bundle.metadata,
    }
    payload = BUNDLE_MAGIC + b"\n" + json.dumps(doc, sort_keys=True).encode()
    Path(path).write_bytes(payload)


def load_bundle(path: str | Path) -> SelectorBundle:
    raw = Path(path).read_bytes()
    if not raw.startswith(BUNDLE_MAGIC + b"\n"):
        raise CorruptBundle(f"{path}: missing bundle magic header")
    try:
        doc = json.loads(raw[len(BUNDLE_MAGIC) + 1 :])
    except json.JSONDecodeError as exc:
        raise CorruptBundle(f"{path}: truncated or invalid payload") from exc
    if doc.get("version") != BUNDLE_VERSION:
        raise SchemaMismatch(f"unsupported bundle version {doc.get('version')}")
    schema = list(doc["feature_schema"])
    if schema != feature_names():
        raise SchemaMismatch("bundle feature schema does not match the extractor layout")
    return SelectorBundle(
        classifier=GBDTClassifier.from_dict(doc["classifier"]),
        estimators={DetectorKind(k): ParamEstimator.from_dict(e) for k, e in doc["estimators"].items()},
        confidence_floor=float(doc["confidence_floor"]),
        feature_schema=schema,
        version=int(doc["version"]),
        metadata=dict(doc["metadata"]),
    )


@dataclass(frozen=True)
class TrainConfig:
    seed: int = 0
    omega: int = DEFAULT_WINDOW
    delay: int = DEFAULT_DELAY
    confidence_floor: float = DEFAULT_CONFIDENCE_FLOOR
    gbdt: GBDTConfig = field(default_factory=GBDTConfig)
    latency_budget_s: float = 2.0
    created: str = ""


@dataclass
class GateReport:
    gate_passed: bool
    autoselector_f1: float
    previous_f1: float
    per_detector_f1: dict[str, float]
    confusion: dict[str, dict[str, int]]
    latency_per_series_s: float
    latency_budget_s: float
    n_train: int
    n_test: int

    def to_json(self) -> str:
        return json.dumps(self.__dict__, sort_keys=True, indent=2)


def corpus_fingerprint(corpus: list[LabeledSeries]) -> str:
    digest = hashlib.sha256()
    for item in sorted(corpus, key=lambda s: s.series_id):
        digest.update(item.series_id.encode())
        digest.update(item.series.timestamps.tobytes())
        digest.update(item.series.values.tobytes())
        digest.update(np.asarray(item.labels, dtype=np.uint8).tobytes())
    return digest.hexdigest()


def _train_bundle(
    train: list[LabeledSeries],
    labels: list[TrainingLabel],
    config: TrainConfig,
) -> SelectorBundle:
    usable = {lab.series_id: lab for lab in labels}
    rows = [item for item in train if item.series_id in usable]
    if not rows:
        raise DegenerateData("no trainable series in the corpus")
    X = np.array(
        [extract_features(last_window_values(item.series, config.omega)).values for item in rows]
    )
    y = [usable[item.series_id].best_kind.value for item in rows]
    classifier = train_gbdt_classifier(X, y, config.gbdt)

    estimators: dict[DetectorKind, ParamEstimator] = {}
    for kind in DetectorKind:
        mask = [i for i, item in enumerate(rows) if usable[item.series_id].best_kind is kind]
        targets = np.array([usable[rows[i].series_id].best_param for i in mask])
        estimators[kind] = train_param_estimator(X[mask], targets, kind, config.gbdt)

    return SelectorBundle(
        classifier=classifier,
        estimators=estimators,
        confidence_floor=config.confidence_floor,
        feature_schema=feature_names(),
        metadata={},
    )


def evaluate_autoselector(
    bundle: SelectorBundle | None,
    corpus: list[LabeledSeries],
    omega: int = DEFAULT_WINDOW,
    delay: int = DEFAULT_DELAY,
) -> tuple[float, list[DetectorChoice]]:
    """Pooled segment-adjusted F1 of select-then-detect over a corpus."""
    acc = MicroMacroAccumulator()
    choices = []
    for item in corpus:
        choice = select_for_series(bundle, item.series, omega)
        output = detect(item.series, DetectorParams(choice.kind, choice.param))
        acc.add(output.labels, item.labels, delay)
        choices.append(choice)
    return acc.row("auto", "eval").f1, choices


def retrain_pipeline(
    corpus: list[LabeledSeries],
    config: TrainConfig = TrainConfig(),
    previous: SelectorBundle | None = None,
) -> tuple[SelectorBundle, GateReport]:
    """Offline pipeline: label, train, evaluate on the held-out quarter, gate.

    The gate passes when the new selector's held-out F1 is at least the
    previous bundle's (the new bundle itself when none is given) and the
    mean selection latency stays inside the budget. A failed gate still
    emits the bundle, marked non-releasable.
    """
    if not corpus:
        raise DegenerateData("empty corpus")
    train, test = split_corpus(corpus, config.seed)
    labels = build_training_labels(train, config.omega, config.delay)
    bundle = _train_bundle(train, labels, config)

    t0 = time.perf_counter()
    new_f1, choices = evaluate_autoselector(bundle, test, config.omega, config.delay)
    latency = (time.perf_counter() - t0) / max(len(test), 1)
    prev_f1 = (
        evaluate_autoselector(previous, test, config.omega, config.delay)[0]
        if previous is not None
        else new_f1
    )

    per_detector: dict[str, float] = {}
    for kind in _KIND_ORDER:
        best_value = train_best_fixed_param(train, kind, config.delay)
        acc = MicroMacroAccumulator()
        for item in test:
            output = detect(item.series, DetectorParams(kind, best_value))
            acc.add(output.labels, item.labels, config.delay)
        per_detector[kind.value] = acc.row(kind.value, "gate").f1

    oracle = {lab.series_id: lab.best_kind.value for lab in build_training_labels(test, config.omega, config.delay)}
    confusion: dict[str, dict[str, int]] = {
        a.value: {b.value: 0 for b in _KIND_ORDER} for a in _KIND_ORDER
    }
    for item, choice in zip(test, choices):
        truth_kind = oracle.get(item.series_id)
        if truth_kind is not None:
            confusion[truth_kind][choice.kind.value] += 1

    gate_passed = new_f1 >= prev_f1 and latency <= config.latency_budget_s
    bundle.metadata = {
        "corpus_hash": corpus_fingerprint(corpus),
        "created": config.created,
        "train_seed": config.seed,
        "n_train_series": len(train),
        "releasable": gate_passed,
    }
    report = GateReport(
        gate_passed=gate_passed,
        autoselector_f1=new_f1,
        previous_f1=prev_f1,
        per_detector_f1=per_detector,
        confusion=confusion,
        latency_per_series_s=latency,
        latency_budget_s=config.latency_budget_s,
        n_train=len(train),
        n_test=len(test),
    )
    return bundle, report


def train_best_fixed_param(
    corpus: list[LabeledSeries],
    kind: DetectorKind,
    delay: int = DEFAULT_DELAY,
) -> float:
    """Grid value maximizing the pooled F1 over the corpus for one kind."""
    best_value, best_f1 = param_grid(kind)[0], -1.0
    for value in param_grid(kind):
        acc = MicroMacroAccumulator()
        for item in corpus:
            try:
                output = detect(item.series, DetectorParams(kind, value))
            except TooShort:
                continue
            acc.add(output.labels, item.labels, delay)
        f1 = acc.row(kind.value, "search").f1
        if f1 > best_f1:
            best_value, best_f1 = value, f1
    return best_value
