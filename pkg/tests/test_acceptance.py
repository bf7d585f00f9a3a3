"""Acceptance suite: one test per release criterion, each printing a
PASS/FAIL line (run with ``pytest tests/test_acceptance.py -v -s``)."""

import json
import time

import numpy as np
import pytest
from fastapi.testclient import TestClient

from tsadkit.benchmark import run_benchmark
from tsadkit.detectors import (
    DetectorKind,
    default_params,
    detect,
    hbos_detect,
    param_grid,
    shesd_detect,
    sr_detect,
)
from tsadkit.errors import SchemaMismatch
from tsadkit.evaluation import adjust_predictions, prf
from tsadkit.selector import TrainConfig, load_bundle, retrain_pipeline, save_bundle
from tsadkit.series import series_from_values
from tsadkit.service import ReselectionPolicy, create_app
from tsadkit.synthetic import CorpusSpec, gen_corpus
from tsadkit.transforms import decompose, fft_amplitude, sr_saliency
from tsadkit.tuning import factor, tune

SINGLE_DETECTORS = ("sr", "hbos", "shesd")


def report(name: str, ok: bool) -> None:
    print(f"\nACCEPTANCE {name}: {'PASS' if ok else 'FAIL'}")
    assert ok, name


@pytest.fixture(scope="module")
def corpus90():
    return gen_corpus(CorpusSpec(seasonal=30, trend=30, level=30), seed=7)


@pytest.fixture(scope="module")
def trained90(corpus90):
    t0 = time.perf_counter()
    bundle, gate = retrain_pipeline(corpus90, TrainConfig(seed=7))
    return bundle, gate, time.perf_counter() - t0


@pytest.fixture(scope="module")
def benchmarks(corpus90, trained90):
    bundle, _, train_seconds = trained90
    t0 = time.perf_counter()
    table2 = run_benchmark(corpus90, bundle, mode="table2", split_seed=7)
    table3 = run_benchmark(corpus90, bundle, mode="table3", split_seed=7)
    return table2, table3, train_seconds + (time.perf_counter() - t0)


def test_ordering_reproduction_table2_analog(benchmarks):
    table2, _, total_seconds = benchmarks
    auto_f1 = table2.row("auto").f1
    best_single = max(table2.row(m).f1 for m in SINGLE_DETECTORS)
    ok = auto_f1 >= best_single - 0.02 and total_seconds < 300.0
    print(
        f"\n  auto micro-F1 {auto_f1:.4f} vs best single {best_single:.4f}, "
        f"runtime {total_seconds:.1f}s"
    )
    report("ordering-reproduction (table-2 analog)", ok)


def test_oracle_gap_bound_table3_analog(benchmarks):
    table2, table3, _ = benchmarks
    rowwise = all(
        table3.row(m).f1 >= table2.row(m).f1 - 1e-12 for m in (*SINGLE_DETECTORS, "auto")
    )
    auto_gain = table3.row("auto").f1 >= table2.row("auto").f1 - 1e-12
    for m in (*SINGLE_DETECTORS, "auto"):
        print(f"\n  {m}: table2 {table2.row(m).f1:.4f} -> table3 {table3.row(m).f1:.4f}")
    report("oracle-gap bound (table-3 analog)", rowwise and auto_gain)


def test_evaluation_protocol_golden():
    truth = np.zeros(10, dtype=bool)
    truth[3:7] = True  # segment [3, 6]

    hit_mid = np.zeros(10, dtype=bool)
    hit_mid[4] = True
    golden1 = adjust_predictions(hit_mid, truth, k=1)[3:7].all()

    hit_late = np.zeros(10, dtype=bool)
    hit_late[6] = True
    golden2 = not adjust_predictions(hit_late, truth, k=1)[3:7].any()

    no_truth = np.zeros(8, dtype=bool)
    pred = np.random.default_rng(0).random(8) < 0.4
    golden3 = np.array_equal(adjust_predictions(pred, no_truth, k=1), pred)

    rng = np.random.default_rng(31)
    properties = True
    for _ in range(1000):
        n = int(rng.integers(4, 50))
        truth = rng.random(n) < 0.25
        pred = rng.random(n) < 0.3
        recalls = []
        for k in (0, 1, 2, n):
            adjusted = adjust_predictions(pred, truth, k)
            if not np.array_equal(adjust_predictions(adjusted, truth, k), adjusted):
                properties = False
            recalls.append(prf(adjusted, truth)[1])
        if not all(a <= b + 1e-12 for a, b in zip(recalls, recalls[1:])):
            properties = False
    report("evaluation-protocol golden tests", bool(golden1 and golden2 and golden3 and properties))


def test_tuning_law():
    exact = factor(50) == 1.0 and factor(0) / factor(100) == 1024.0
    rng = np.random.default_rng(17)
    monotone = True
    alphas = np.linspace(0.0, 100.0, 11)
    for _ in range(200):
        n = int(rng.integers(30, 90))
        v = rng.normal(rng.uniform(5, 40), rng.uniform(0.3, 3.0), n)
        v[rng.integers(0, n, 4)] += rng.uniform(2, 40, 4)
        labels = rng.random(n) < 0.4
        reported = [
            frozenset(np.flatnonzero(tune(v, labels, a).adjusted_labels)) for a in alphas
        ]
        for i in range(len(alphas)):
            for j in range(i + 1, len(alphas)):
                if not reported[i] <= reported[j]:
                    monotone = False
    report("tuning law (alpha monotonicity + factor anchors)", exact and monotone)


def test_detector_properties():
    rng = np.random.default_rng(23)
    ok = True
    for _ in range(100):
        n = int(rng.integers(60, 140))
        v = rng.normal(rng.uniform(5, 30), rng.uniform(0.3, 1.5), n)
        v[rng.integers(0, n, 3)] += rng.uniform(3, 25, 3)
        series = series_from_values(v, granularity=3600)

        prev = None
        for tau in param_grid(DetectorKind.SR):
            labels = frozenset(np.flatnonzero(sr_detect(v, tau).labels))
            if prev is not None and not labels <= prev:
                ok = False
            prev = labels
        prev = None
        for theta in param_grid(DetectorKind.HBOS):
            labels = frozenset(np.flatnonzero(hbos_detect(v, theta).labels))
            if prev is not None and not labels <= prev:
                ok = False
            prev = labels
        prev = None
        for ratio in sorted(param_grid(DetectorKind.SHESD)):
            out = shesd_detect(series, ratio)
            if int(out.labels.sum()) > int(ratio * n):
                ok = False  # budget exceeded
            labels = frozenset(np.flatnonzero(out.labels))
            if prev is not None and not prev <= labels:
                ok = False
            prev = labels

        positive = rng.uniform(5.0, 15.0, n)
        scale = rng.uniform(1.5, 20.0)
        base = sr_saliency(positive).scores
        scaled = sr_saliency(scale * positive).scores
        if np.max(np.abs(base - scaled)) > 1e-6:
            ok = False

    constant = series_from_values(np.full(96, 7.0))
    for kind in DetectorKind:
        if detect(constant, default_params(kind)).labels.any():
            ok = False
    report("detector properties (monotonicity, budget, scale, constant)", ok)


def test_transform_numerics():
    rng = np.random.default_rng(29)
    ok = True
    for n in (8, 17, 64, 128, 256):
        v = rng.normal(0, 2, n)
        k = np.arange(n)
        dft = np.exp(-2j * np.pi * np.outer(k, k) / n) @ v
        amps = fft_amplitude(v)
        scale = np.abs(dft).max()
        if np.max(np.abs(amps - np.abs(dft))) > 1e-9 * scale:
            ok = False
        energy = float(np.sum(v**2))
        if abs(energy - np.sum(amps**2) / n) > 1e-6 * energy:
            ok = False
    for _ in range(20):
        n = int(rng.integers(8, 200))
        v = rng.normal(rng.uniform(-10, 10), rng.uniform(0.1, 5), n)
        dec = decompose(v)
        bound = 1e-9 * max(1.0, float(np.max(np.abs(v))))
        if np.max(np.abs(dec.trend + dec.seasonal + dec.residual - v)) > bound:
            ok = False
    report("transform numerics (DFT oracle, Parseval, reconstruction)", ok)


def test_bundle_round_trip(trained90, tmp_path):
    bundle, _, _ = trained90
    path = tmp_path / "acceptance.adsb"
    save_bundle(bundle, path)
    loaded = load_bundle(path)
    rng = np.random.default_rng(37)
    probe = rng.normal(size=(100, 82))
    bitwise = np.array_equal(
        bundle.classifier.predict_proba(probe), loaded.classifier.predict_proba(probe)
    ) and all(
        bundle.estimators[kind].predict_one(row) == loaded.estimators[kind].predict_one(row)
        for kind in DetectorKind
        for row in probe
    )

    raw = path.read_bytes()
    doc = json.loads(raw.split(b"\n", 1)[1])
    doc["feature_schema"] = doc["feature_schema"][:81]
    bad = tmp_path / "drifted.adsb"
    bad.write_bytes(b"ADSB1\n" + json.dumps(doc).encode())
    try:
        load_bundle(bad)
        schema_rejected = False
    except SchemaMismatch:
        schema_rejected = True
    report("bundle round-trip (bitwise + schema check)", bitwise and schema_rejected)


def test_service_behavior(tmp_path):
    ok = True
    data_dir = tmp_path / "svc"
    rng = np.random.default_rng(41)

    with TestClient(create_app(data_dir, policy=ReselectionPolicy(window=15))) as client:
        # registration totality: every register responds with a choice
        for name, values in (
            ("flat", np.full(40, 5.0)),
            ("noise", rng.normal(0, 1, 64)),
            ("season", 10 + 4 * np.sin(2 * np.pi * np.arange(168) / 24)),
        ):
            resp = client.post(
                "/series",
                json={
                    "id": name,
                    "points": [
                        {"timestamp": i * 3600, "value": float(v)} for i, v in enumerate(values)
                    ],
                },
            )
            if resp.status_code != 200 or "kind" not in resp.json()["choice"]:
                ok = False

        # anomaly-rate trigger: spaced giant spikes push the trailing rate over 0.25
        base = rng.normal(10, 0.3, 60)
        client.post(
            "/series",
            json={
                "id": "burst",
                "points": [{"timestamp": i * 60, "value": float(v)} for i, v in enumerate(base)],
            },
        )
        block = rng.normal(10, 0.3, 24)
        sign = 1.0
        for k in range(2, 23, 4):
            block[k] = 10 + sign * 400.0
            sign = -sign
        resp = client.post(
            "/series/burst/points",
            json={
                "points": [
                    {"timestamp": (60 + i) * 60, "value": float(v)} for i, v in enumerate(block)
                ]
            },
        )
        body = resp.json()
        if not (body["trailing_anomaly_rate"] > 0.25 and body["reselection_triggered"]):
            ok = False

        # feedback trigger: 6 false alerts in 10 items crosses the 0.5 ceiling
        values = rng.normal(10, 0.4, 64)
        values[[7, 18, 26, 41, 47, 59]] += np.array([35.0, 45.0, 40.0, 50.0, 38.0, 42.0])
        client.post(
            "/series",
            json={
                "id": "fb",
                "points": [{"timestamp": i * 60, "value": float(v)} for i, v in enumerate(values)],
            },
        )
        reported = [
            i
            for i, flag in enumerate(client.get("/series/fb/result").json()["labels"])
            if flag
        ]
        if len(reported) < 6:
            ok = False
        triggered = False
        for i in range(4):
            client.post("/series/fb/feedback", json={"index": int(i), "is_anomaly": False})
        for i in range(6):
            r = client.post(
                "/series/fb/feedback",
                json={"index": int(reported[i % len(reported)]), "is_anomaly": False},
            ).json()
            triggered = triggered or r["reselection_triggered"]
        if not triggered:
            ok = False

        before = client.get("/series/fb/result").content

    # restart: replaying the journal must reproduce /result byte-for-byte
    with TestClient(create_app(data_dir, policy=ReselectionPolicy(window=15))) as client:
        after = client.get("/series/fb/result").content
    if after != before:
        ok = False
    report("service behavior (totality, triggers, restart replay)", ok)
