import json

import numpy as np
import pytest

from tsadkit.detectors import DetectorKind, DetectorParams, detect, param_grid
from tsadkit.errors import CorruptBundle, DegenerateData, SchemaMismatch, TooFew
from tsadkit.evaluation import adjusted_f1
from tsadkit.features import extract_features, feature_names
from tsadkit.gbdt import GBDTConfig
from tsadkit.selector import (
    BUNDLE_MAGIC,
    ParamEstimator,
    SelectorBundle,
    TrainConfig,
    build_training_labels,
    evaluate_autoselector,
    heuristic_select,
    load_bundle,
    retrain_pipeline,
    save_bundle,
    select,
    select_for_series,
    train_param_estimator,
)
from tsadkit.series import LabeledSeries, series_from_values
from tsadkit.synthetic import CorpusSpec, gen_corpus

FAST_GBDT = GBDTConfig(n_trees=20, max_depth=4)


def spike_series(n=120, at=(40,), seed=0, sigma=0.4, amp=12.0):
    rng = np.random.default_rng(seed)
    v = rng.normal(25, sigma, n)
    labels = np.zeros(n, dtype=bool)
    for i in at:
        v[i] += amp * sigma
        labels[i] = True
    return LabeledSeries(series_from_values(v, granularity=3600), labels, f"spike{seed}")


@pytest.fixture(scope="module")
def small_corpus():
    return gen_corpus(CorpusSpec(seasonal=4, trend=4, level=4, length=200), seed=3)


@pytest.fixture(scope="module")
def trained(small_corpus):
    return retrain_pipeline(small_corpus, TrainConfig(seed=1, gbdt=FAST_GBDT))


# ---------------------------------------------------------------------------
# training-label generation
# ---------------------------------------------------------------------------

def test_labels_match_exhaustive_grid_oracle():
    item = spike_series()
    label = build_training_labels([item])[0]
    # oracle: recompute the full grid independently
    results = {}
    for kind in DetectorKind:
        for value in param_grid(kind):
            out = detect(item.series, DetectorParams(kind, value))
            results[(kind, value)] = adjusted_f1(out.labels, item.labels)
    assert results[(label.best_kind, label.best_param)] == max(results.values())
    assert label.best_f1 == max(results.values())


def test_all_zero_f1_falls_back_to_heuristic():
    # truth labels a point no detector will ever flag in pure flat noise
    rng = np.random.default_rng(5)
    v = np.full(80, 42.0)
    labels = np.zeros(80, dtype=bool)
    labels[3] = True  # nothing anomalous at index 3
    item = LabeledSeries(series_from_values(v), labels, "hopeless")
    out = build_training_labels([item], omega=29)[0]
    fallback = heuristic_select(item.series)
    assert out.best_kind == fallback.kind
    assert out.best_param == fallback.param
    assert out.best_f1 == 0.0


def test_tie_breaks_toward_sr():
    # one huge isolated spike: several kinds reach F1 = 1.0, sr must win
    item = spike_series(n=200, at=(100,), seed=7, amp=30.0)
    label = build_training_labels([item])[0]
    results = {
        kind: max(
            adjusted_f1(detect(item.series, DetectorParams(kind, v)).labels, item.labels)
            for v in param_grid(kind)
        )
        for kind in DetectorKind
    }
    assert results[DetectorKind.SR] == 1.0
    assert sum(1 for f1 in results.values() if f1 == 1.0) >= 2
    assert label.best_kind is DetectorKind.SR


def test_short_series_skipped_with_warning(caplog):
    short = LabeledSeries(series_from_values(np.ones(10)), np.zeros(10, dtype=bool), "short")
    with caplog.at_level("WARNING"):
        labels = build_training_labels([short, spike_series()])
    assert len(labels) == 1
    assert "skipped 1" in caplog.text


# ---------------------------------------------------------------------------
# parameter estimators
# ---------------------------------------------------------------------------

def test_estimator_constant_fit():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(40, 82))
    est = train_param_estimator(X, np.full(40, 2.0), DetectorKind.SR, FAST_GBDT)
    for row in X[:5]:
        assert est.predict_one(row) == pytest.approx(2.0, abs=1e-6)


def test_estimator_below_five_samples_uses_default():
    X = np.zeros((3, 82))
    est = train_param_estimator(X, np.array([6.0, 6.0, 6.0]), DetectorKind.SR, FAST_GBDT)
    assert est.model is None
    assert est.predict_one(np.zeros(82)) == 2.0


def test_estimator_clamps_to_grid_range():
    est = ParamEstimator(DetectorKind.SR, constant=-1.0)
    assert est.predict_one(np.zeros(82)) == 0.5
    est_hi = ParamEstimator(DetectorKind.SHESD, constant=9.0)
    assert est_hi.predict_one(np.zeros(82)) == 0.20


# ---------------------------------------------------------------------------
# heuristic and classifier selection
# ---------------------------------------------------------------------------

def test_heuristic_seasonal_goes_shesd():
    t = np.arange(168)
    series = series_from_values(10 + 4 * np.sin(2 * np.pi * t / 24), granularity=3600)
    choice = heuristic_select(series)
    assert (choice.kind, choice.param) == (DetectorKind.SHESD, 0.01)
    assert choice.source == "heuristic"
    assert choice.confidence == 0.0


def test_heuristic_noise_and_constant_go_sr():
    rng = np.random.default_rng(1)
    for values in (rng.normal(size=100), np.full(50, 3.0)):
        choice = heuristic_select(series_from_values(values))
        assert (choice.kind, choice.param) == (DetectorKind.SR, 2.0)


class _FixedProbaClassifier:
    def __init__(self, proba, classes):
        self._proba = np.asarray(proba, dtype=float)
        self.classes_ = classes

    def predict_proba(self, X):
        return np.tile(self._proba, (X.shape[0], 1))

    def to_dict(self):  # pragma: no cover - not persisted in these tests
        return {}


def _stub_bundle(proba, floor=0.5):
    return SelectorBundle(
        classifier=_FixedProbaClassifier(proba, ["hbos", "shesd", "sr"]),
        estimators={
            DetectorKind.SR: ParamEstimator(DetectorKind.SR, 3.0),
            DetectorKind.HBOS: ParamEstimator(DetectorKind.HBOS, 0.99),
            DetectorKind.SHESD: ParamEstimator(DetectorKind.SHESD, 0.02),
        },
        confidence_floor=floor,
        feature_schema=feature_names(),
    )


def test_select_confident_classifier_choice():
    rng = np.random.default_rng(2)
    series = series_from_values(rng.normal(size=60))
    fv = extract_features(series.values[-29:])
    choice = select(_stub_bundle([0.9, 0.05, 0.05]), fv, series)
    assert choice.kind is DetectorKind.HBOS
    assert choice.source == "classifier"
    assert choice.confidence == pytest.approx(0.9)
    assert choice.param == 0.99


def test_select_below_floor_goes_heuristic():
    rng = np.random.default_rng(3)
    series = series_from_values(rng.normal(size=60))
    fv = extract_features(series.values[-29:])
    choice = select(_stub_bundle([0.34, 0.33, 0.33]), fv, series)
    assert choice.source == "heuristic"
    assert choice.kind is DetectorKind.SR


def test_select_estimator_clamped_param():
    rng = np.random.default_rng(4)
    series = series_from_values(rng.normal(size=60))
    fv = extract_features(series.values[-29:])
    bundle = _stub_bundle([0.05, 0.05, 0.9])
    bundle.estimators[DetectorKind.SR] = ParamEstimator(DetectorKind.SR, -1.0)
    choice = select(bundle, fv, series)
    assert choice.kind is DetectorKind.SR
    assert choice.param == 0.5


def test_select_for_series_total_without_bundle():
    rng = np.random.default_rng(5)
    assert select_for_series(None, series_from_values(rng.normal(size=40))).source == "heuristic"
    assert select_for_series(None, series_from_values(np.ones(5))).source == "heuristic"


def test_select_rejects_wrong_feature_shape():
    rng = np.random.default_rng(6)
    series = series_from_values(rng.normal(size=60))
    bundle = _stub_bundle([0.9, 0.05, 0.05])
    fv = extract_features(series.values[-29:])
    object.__setattr__(fv, "values", fv.values[:81])
    with pytest.raises(SchemaMismatch):
        select(bundle, fv, series)


def test_bundle_requires_all_estimators():
    with pytest.raises(SchemaMismatch):
        SelectorBundle(
            classifier=_FixedProbaClassifier([1.0], ["sr"]),
            estimators={DetectorKind.SR: ParamEstimator(DetectorKind.SR, 2.0)},
            confidence_floor=0.5,
            feature_schema=feature_names(),
        )


# ---------------------------------------------------------------------------
# persistence
# ---------------------------------------------------------------------------

def test_bundle_round_trip_bitwise(trained, tmp_path):
    bundle, _ = trained
    path = tmp_path / "model.adsb"
    save_bundle(bundle, path)
    loaded = load_bundle(path)
    rng = np.random.default_rng(6)
    probe = rng.normal(size=(100, 82))
    assert np.array_equal(
        bundle.classifier.predict_proba(probe), loaded.classifier.predict_proba(probe)
    )
    for kind in DetectorKind:
        for row in probe[:10]:
            assert bundle.estimators[kind].predict_one(row) == loaded.estimators[kind].predict_one(row)
    assert loaded.confidence_floor == bundle.confidence_floor
    assert loaded.metadata == bundle.metadata


def test_truncated_bundle_rejected(trained, tmp_path):
    bundle, _ = trained
    path = tmp_path / "model.adsb"
    save_bundle(bundle, path)
    path.write_bytes(path.read_bytes()[: len(path.read_bytes()) // 2])
    with pytest.raises(CorruptBundle):
        load_bundle(path)


def test_wrong_magic_rejected(tmp_path):
    path = tmp_path / "bad.adsb"
    path.write_bytes(b"NOTME\n{}")
    with pytest.raises(CorruptBundle):
        load_bundle(path)


def test_schema_drift_rejected(trained, tmp_path):
    bundle, _ = trained
    path = tmp_path / "model.adsb"
    save_bundle(bundle, path)
    raw = path.read_bytes()
    doc = json.loads(raw[len(BUNDLE_MAGIC) + 1 :])
    doc["feature_schema"] = doc["feature_schema"][:81]
    path.write_bytes(BUNDLE_MAGIC + b"\n" + json.dumps(doc).encode())
    with pytest.raises(SchemaMismatch):
        load_bundle(path)


# ---------------------------------------------------------------------------
# retrain pipeline
# ---------------------------------------------------------------------------

def test_retrain_gate_passes_self_comparison(trained):
    _, report = trained
    assert report.gate_passed
    assert report.autoselector_f1 == report.previous_f1
    assert set(report.per_detector_f1) == {"sr", "hbos", "shesd"}
    assert report.n_train + report.n_test == 12


def test_retrain_deterministic(small_corpus, trained):
    bundle_a, _ = trained
    bundle_b, report_b = retrain_pipeline(small_corpus, TrainConfig(seed=1, gbdt=FAST_GBDT))
    assert bundle_a.classifier.to_dict() == bundle_b.classifier.to_dict()
    assert report_b.gate_passed


def test_retrain_gate_against_previous(small_corpus, trained):
    bundle, _ = trained
    _, report = retrain_pipeline(
        small_corpus, TrainConfig(seed=1, gbdt=FAST_GBDT), previous=bundle
    )
    assert report.autoselector_f1 == report.previous_f1
    assert report.gate_passed


def test_retrain_empty_corpus_rejected():
    with pytest.raises(DegenerateData):
        retrain_pipeline([], TrainConfig())
    with pytest.raises(TooFew):
        retrain_pipeline([spike_series()], TrainConfig())


def test_oracle_bound_on_training_set(small_corpus, trained):
    # the selector can at best match its exhaustive-search teacher
    bundle, _ = trained
    train_labels = build_training_labels(small_corpus)
    auto_f1, _ = evaluate_autoselector(bundle, small_corpus)
    per_series_best = [lab.best_f1 for lab in train_labels]
    from tsadkit.evaluation import MicroMacroAccumulator

    oracle = MicroMacroAccumulator()
    for item, lab in zip(small_corpus, train_labels):
        out = detect(item.series, DetectorParams(lab.best_kind, lab.best_param))
        oracle.add(out.labels, item.labels)
    assert auto_f1 <= oracle.row("oracle", "train").f1 + 1e-9
    assert all(0.0 <= f1 <= 1.0 for f1 in per_series_best)
