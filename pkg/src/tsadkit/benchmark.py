"""Benchmark runner comparing fixed-parameter detectors with auto-selection.

Two modes over the same held-out quarter of a corpus:

* ``table2`` -- each detector runs with the single parameter that was best
  on the train split; the auto row selects kind and parameter per series.
* ``table3`` -- each detector (and the auto row's selected kind) runs with
  the per-series best parameter found by exhaustive grid search on the
  held-out series itself, isolating kind selection from parameter fit.
"""

from __future__ import annotations

from .detectors import DetectorKind, DetectorParams, detect, param_grid
from .errors import TooShort
from .evaluation import DEFAULT_DELAY, EvalReport, MicroMacroAccumulator, adjusted_f1, split_corpus
from .selector import SelectorBundle, select_for_series, train_best_fixed_param
from .series import DEFAULT_WINDOW, LabeledSeries

_KINDS = (DetectorKind.SR, DetectorKind.HBOS, DetectorKind.SHESD)


def best_param_on_series(
    item: LabeledSeries, kind: DetectorKind, delay: int = DEFAULT_DELAY
) -> tuple[float, float]:
    """(param, f1) of the grid value maximizing this series' adjusted F1."""
    best_value, best_f1 = param_grid(kind)[0], -1.0
    for value in param_grid(kind):
        try:
            output = detect(item.series, DetectorParams(kind, value))
        except TooShort:
            continue
        f1 = adjusted_f1(output.labels, item.labels, delay)
        if f1 > best_f1:
            best_value, best_f1 = value, f1
    return best_value, best_f1


def run_benchmark(
    corpus: list[LabeledSeries],
    bundle: SelectorBundle | None,
    omega: int = DEFAULT_WINDOW,
    delay: int = DEFAULT_DELAY,
    mode: str = "table2",
    split_seed: int = 0,
) -> EvalReport:
    """Evaluate SR/HBOS/SHESD rows plus the auto-selection row on the test split."""
    if mode not in ("table2", "table3"):
        raise ValueError(f"unknown benchmark mode {mode!r}")
    train, test = split_corpus(corpus, split_seed)
    report = EvalReport(mode=mode)

    fixed: dict[DetectorKind, float] = {}
    if mode == "table2":
        for kind in _KINDS:
            fixed[kind] = train_best_fixed_param(train, kind, delay)

    for kind in _KINDS:
        acc = MicroMacroAccumulator()
        for item in test:
            value = fixed[kind] if mode == "table2" else best_param_on_series(item, kind, delay)[0]
            try:
                output = detect(item.series, DetectorParams(kind, value))
            except TooShort:
                continue
            acc.add(output.labels, item.labels, delay)
        report.rows.append(acc.row(kind.value, mode))

    acc = MicroMacroAccumulator()
    for item in test:
        choice = select_for_series(bundle, item.series, omega)
        if mode == "table2":
            value = choice.param
        else:
            value = best_param_on_series(item, choice.kind, delay)[0]
        output = detect(item.series, DetectorParams(choice.kind, value))
        acc.add(output.labels, item.labels, delay)
        report.per_series[item.series_id] = {
            "kind": choice.kind.value,
            "param": float(value),
            "f1": adjusted_f1(output.labels, item.labels, delay),
        }
    report.rows.append(acc.row("auto", mode))
    return report
