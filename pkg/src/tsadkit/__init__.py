"""Time-series anomaly detection with automatic detector selection.

The pipeline: validate a series, extract window features, pick the best
detector kind and hyper-parameter (trained selector with heuristic
fallback), detect, then refine the result with a single sensitivity knob.
"""

from .benchmark import run_benchmark
from .detectors import (
    DetectorKind,
    DetectorParams,
    DetectionOutput,
    detect,
    hbos_detect,
    param_grid,
    shesd_detect,
    sr_detect,
)
from .errors import TsadError
from .evaluation import adjust_predictions, prf, split_corpus
from .features import FeatureVector, extract_features, feature_names
from .selector import (
    DetectorChoice,
    SelectorBundle,
    build_training_labels,
    heuristic_select,
    load_bundle,
    retrain_pipeline,
    save_bundle,
    select,
    select_for_series,
)
from .series import LabeledSeries, TimeSeries, Window, validate, windows
from .synthetic import CorpusSpec, gen_corpus, load_corpus, save_corpus
from .transforms import decompose, detect_period, fft_amplitude, sr_saliency
from .tuning import band, factor, tune

__version__ = "0.1.0"

__all__ = [
    "DetectionOutput",
    "DetectorChoice",
    "DetectorKind",
    "DetectorParams",
    "CorpusSpec",
    "FeatureVector",
    "LabeledSeries",
    "SelectorBundle",
    "TimeSeries",
    "TsadError",
    "Window",
    "adjust_predictions",
    "band",
    "build_training_labels",
    "decompose",
    "detect",
    "detect_period",
    "extract_features",
    "factor",
    "feature_names",
    "fft_amplitude",
    "gen_corpus",
    "hbos_detect",
    "heuristic_select",
    "load_bundle",
    "load_corpus",
    "param_grid",
    "prf",
    "retrain_pipeline",
    "run_benchmark",
    "save_bundle",
    "save_corpus",
    "select",
    "select_for_series",
    "shesd_detect",
    "split_corpus",
    "sr_detect",
    "sr_saliency",
    "tune",
    "validate",
    "windows",
]
