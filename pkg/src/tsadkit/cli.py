"""Command-line operator surface: train, detect, eval, gen-corpus, serve."""

from __future__ import annotations

import json
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

import click

from .benchmark import run_benchmark
from .detectors import DetectorParams, detect as run_detect
from .errors import TsadError
from .selector import TrainConfig, load_bundle, retrain_pipeline, save_bundle, select_for_series
from .series import DEFAULT_WINDOW, load_csv
from .synthetic import CorpusSpec, gen_corpus, load_corpus, save_corpus
from .tuning import DEFAULT_ALPHA, tune


def _build_timestamp() -> str:
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    moment = (
        datetime.fromtimestamp(int(epoch), tz=timezone.utc)
        if epoch
        else datetime.now(tz=timezone.utc)
    )
    return moment.isoformat(timespec="seconds")


@click.group()
def main() -> None:
    """Time-series anomaly detection with automatic detector selection."""


@main.command()
@click.option("--corpus", "corpus_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--omega", default=DEFAULT_WINDOW, show_default=True, type=int)
@click.option("--previous", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Bundle the release gate compares against.")
def train(corpus_dir: str, out_path: str, seed: int, omega: int, previous: str | None) -> None:
    """Train a selector bundle from a labeled corpus directory."""
    try:
        corpus = load_corpus(corpus_dir)
        prev = load_bundle(previous) if previous else None
        config = TrainConfig(seed=seed, omega=omega, created=_build_timestamp())
        bundle, report = retrain_pipeline(corpus, config, previous=prev)
    except TsadError as exc:
        raise click.UsageError(str(exc)) from exc
    save_bundle(bundle, out_path)
    click.echo(report.to_json())
    if not report.gate_passed:
        click.echo("release gate FAILED; bundle marked non-releasable", err=True)
        sys.exit(1)


@main.command(name="detect")
@click.option("--bundle", "bundle_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--input", "input_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--alpha", type=click.FloatRange(0.0, 100.0), default=DEFAULT_ALPHA, show_default=True)
@click.option("--omega", default=DEFAULT_WINDOW, show_default=True, type=int)
def detect_cmd(bundle_path: str | None, input_path: str, alpha: float, omega: int) -> None:
    """Detect anomalies in one CSV series and tune the result."""
    try:
        series = load_csv(input_path)
        bundle = load_bundle(bundle_path) if bundle_path else None
        choice = select_for_series(bundle, series, omega)
        output = run_detect(series, DetectorParams(choice.kind, choice.param))
        result = tune(series, output.labels, alpha)
    except TsadError as exc:
        raise click.UsageError(str(exc)) from exc
    click.echo(
        json.dumps(
            {
                "schema_version": 1,
                "choice": choice.to_dict(),
                "alpha": alpha,
                "labels": output.labels.tolist(),
                "scores": output.scores.tolist(),
                "tuned_labels": result.adjusted_labels.tolist(),
                "band": {"lower": result.lower.tolist(), "upper": result.upper.tolist()},
            },
            sort_keys=True,
        )
    )


@main.command(name="eval")
@click.option("--bundle", "bundle_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--corpus", "corpus_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--mode", type=click.Choice(["table2", "table3"]), default="table2", show_default=True)
@click.option("--seed", default=0, show_default=True, type=int, help="Corpus split seed.")
@click.option("--omega", default=DEFAULT_WINDOW, show_default=True, type=int)
def eval_cmd(bundle_path: str, corpus_dir: str, mode: str, seed: int, omega: int) -> None:
    """Benchmark fixed-parameter detectors against auto-selection."""
    try:
        bundle = load_bundle(bundle_path)
        corpus = load_corpus(corpus_dir)
        report = run_benchmark(corpus, bundle, omega=omega, mode=mode, split_seed=seed)
    except TsadError as exc:
        raise click.UsageError(str(exc)) from exc
    click.echo(report.to_text(), err=True)
    click.echo(report.to_json())


@main.command(name="gen-corpus")
@click.option("--spec", "spec_path", type=click.Path(exists=True, dir_okay=False), default=None,
              help="JSON file with family counts; defaults to the built-in mix.")
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option("--seed", required=True, type=int)
def gen_corpus_cmd(spec_path: str | None, out_dir: str, seed: int) -> None:
    """Generate a synthetic labeled corpus directory."""
    try:
        doc = json.loads(Path(spec_path).read_text()) if spec_path else {}
        spec = CorpusSpec.from_dict(doc)
        corpus = gen_corpus(spec, seed)
        save_corpus(corpus, out_dir)
    except (TsadError, json.JSONDecodeError) as exc:
        raise click.UsageError(str(exc)) from exc
    click.echo(json.dumps({"series": len(corpus), "directory": out_dir}, sort_keys=True))


@main.command()
@click.option("--bundle", "bundle_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--data-dir", default=None, type=click.Path(file_okay=False),
              help="State directory; defaults to $AD_DATA_DIR or ./ad-data.")
@click.option("--ui-dir", default=None, type=click.Path(file_okay=False),
              help="Built dashboard assets served at /ui.")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True, type=int)
def serve(bundle_path: str | None, data_dir: str | None, ui_dir: str | None, host: str, port: int) -> None:
    """Run the HTTP service backing streaming detection and the tuning UI."""
    import uvicorn

    from .service import create_app

    data_dir = data_dir or os.environ.get("AD_DATA_DIR", "ad-data")
    if ui_dir is None and Path("frontend/dist").is_dir():
        ui_dir = "frontend/dist"
    try:
        bundle = load_bundle(bundle_path) if bundle_path else None
    except TsadError as exc:
        raise click.UsageError(str(exc)) from exc
    app = create_app(data_dir, bundle=bundle, ui_dir=ui_dir)
    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
