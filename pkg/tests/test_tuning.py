import numpy as np
import pytest

from tsadkit.errors import LengthMismatch, OutOfRange
from tsadkit.series import series_from_values
from tsadkit.transforms import decompose
from tsadkit.tuning import band, factor, tune


def tune_oracle(values, labels, alpha):
    """Direct recomputation: keep an anomaly iff |residual| > factor * mu."""
    dec = decompose(values)
    mu = 0.5 * np.abs(dec.trend) + 0.5 * np.mean(np.abs(dec.trend))
    delta = 2.0 ** ((50.0 - alpha) / 10.0) * mu
    return np.asarray(labels, dtype=bool) & (np.abs(dec.residual) > delta)


def test_factor_anchor_values():
    assert factor(50) == 1.0
    assert factor(100) == 0.03125
    assert factor(0) == 32.0
    assert factor(0) / factor(100) == 1024.0


def test_factor_strictly_decreasing():
    values = [factor(a) for a in range(0, 101, 5)]
    assert all(a > b for a, b in zip(values, values[1:]))


def test_factor_out_of_range():
    for alpha in (-1, 101, 1e9):
        with pytest.raises(OutOfRange):
            factor(alpha)


def test_tune_never_adds_anomalies():
    rng = np.random.default_rng(0)
    v = rng.normal(10, 1, 120)
    result = tune(v, np.zeros(120, dtype=bool), alpha=100)
    assert not result.adjusted_labels.any()


def test_tune_constant_series_suppresses():
    v = np.full(60, 10.0)
    labels = np.zeros(60, dtype=bool)
    labels[30] = True
    result = tune(v, labels, alpha=50)
    assert not result.adjusted_labels.any()
    assert np.allclose(result.delta, 10.0)


def test_tune_matches_direct_recomputation():
    rng = np.random.default_rng(1)
    for alpha in (0, 25, 50, 75, 100):
        v = rng.normal(20, 2, 96)
        labels = rng.random(96) < 0.2
        got = tune(v, labels, alpha).adjusted_labels
        assert np.array_equal(got, tune_oracle(v, labels, alpha))


def test_tune_alpha_monotone():
    rng = np.random.default_rng(2)
    for _ in range(25):
        v = rng.normal(15, 3, 80)
        v[rng.integers(0, 80, 6)] += rng.uniform(5, 30, 6)
        labels = np.ones(80, dtype=bool)
        previous = None
        for alpha in np.linspace(0, 100, 11):
            reported = set(np.flatnonzero(tune(v, labels, alpha).adjusted_labels))
            if previous is not None:
                assert previous.issubset(reported)
            previous = reported


def test_tune_suppression_only_pointwise():
    rng = np.random.default_rng(3)
    v = rng.normal(5, 1, 64)
    labels = rng.random(64) < 0.5
    result = tune(v, labels, alpha=90)
    assert np.all(labels | ~result.adjusted_labels)


def test_tune_scale_equivariant_on_periodic_series():
    t = np.arange(144)
    v = 10 + 4 * np.sin(2 * np.pi * t / 12)
    v[77] += 9.0
    labels = np.zeros(144, dtype=bool)
    labels[77] = True
    for alpha in (10, 50, 90):
        base = tune(v, labels, alpha).adjusted_labels
        scaled = tune(3.0 * v, labels, alpha).adjusted_labels
        assert np.array_equal(base, scaled)


def test_tune_length_mismatch_and_range():
    v = np.ones(50)
    with pytest.raises(LengthMismatch):
        tune(v, np.zeros(49, dtype=bool), 50)
    with pytest.raises(OutOfRange):
        tune(v, np.zeros(50, dtype=bool), 101)


def test_band_width_ratio_exact():
    rng = np.random.default_rng(4)
    v = rng.normal(30, 2, 72)
    lo0, hi0 = band(v, 0)
    lo100, hi100 = band(v, 100)
    ratio = (hi100 - lo100) / (hi0 - lo0)
    assert np.allclose(ratio, 2.0**-10)


def test_band_constant_series():
    lo, hi = band(np.full(40, 10.0), 50)
    assert np.allclose(lo, 0.0)
    assert np.allclose(hi, 20.0)


def test_band_contains_baseline():
    rng = np.random.default_rng(5)
    v = rng.normal(8, 2, 60)
    series = series_from_values(v)
    dec = decompose(series)
    for alpha in (0, 50, 100):
        lo, hi = band(series, alpha)
        baseline = dec.trend + dec.seasonal
        assert np.all(lo <= baseline + 1e-12)
        assert np.all(baseline <= hi + 1e-12)


def test_band_matches_tune_band():
    rng = np.random.default_rng(6)
    v = rng.normal(12, 1, 90)
    labels = np.zeros(90, dtype=bool)
    result = tune(v, labels, 35)
    lo, hi = band(v, 35)
    assert np.array_equal(result.lower, lo)
    assert np.array_equal(result.upper, hi)
