"""Single-process serving layer: register series, stream points, read tuned
results, collect feedback, and re-select detectors when quality drifts.

State is an append-only JSON-lines journal per series under a data
directory; replaying the journal after a restart reproduces responses
byte-for-byte. Re-selection fires when the trailing anomaly rate crosses
its ceiling or when user feedback reports too many false alerts.
"""

from __future__ import annotations

import json
import re
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .detectors import DetectorKind, DetectorParams, detect
from .errors import TooShort, TsadError
from .selector import DetectorChoice, SelectorBundle, select_for_series
from .series import DEFAULT_WINDOW, TimeSeries, _parse_timestamp, validate
from .tuning import DEFAULT_ALPHA, tune

SCHEMA_VERSION = 1
_ID_PATTERN = re.compile(r"^[A-Za-z0-9_.-]{1,128}$")


@dataclass(frozen=True)
class ReselectionPolicy:
    anomaly_rate_ceiling: float = 0.25
    false_alert_rate_ceiling: float = 0.5
    min_feedback: int = 10
    window: int = 500

    def __post_init__(self) -> None:
        assert 0.0 < self.anomaly_rate_ceiling <= 1.0
        assert 0.0 < self.false_alert_rate_ceiling <= 1.0


@dataclass
class SeriesRegistration:
    series_id: str
    series: TimeSeries
    choice: DetectorChoice
    alpha: float = DEFAULT_ALPHA
    feedback: list[dict] = field(default_factory=list)
    feedback_mark: int = 0  # feedback items consumed by the last re-selection


@dataclass
class DetectionState:
    labels: np.ndarray  # tuned labels (what the user is shown)
    raw_labels: np.ndarray
    scores: np.ndarray
    lower: np.ndarray
    upper: np.ndarray


class SeriesStore:
    """Journal-backed registry of series and their active detector choices."""

    def __init__(
        self,
        data_dir: str | Path,
        bundle: SelectorBundle | None = None,
        policy: ReselectionPolicy | None = None,
        omega: int = DEFAULT_WINDOW,
    ) -> None:
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self.bundle = bundle
        self.policy = policy or ReselectionPolicy()
        self.omega = omega
        self.registrations: dict[str, SeriesRegistration] = {}
        self.lock = threading.RLock()
        self._replay()

    # -- journal ------------------------------------------------------------

    def _journal_path(self, series_id: str) -> Path:
        return self.data_dir / f"{series_id}.jsonl"

    def _log(self, series_id: str, event: dict) -> None:
        with open(self._journal_path(series_id), "a") as fh:
            fh.write(json.dumps(event, sort_keys=True) + "\n")
            fh.flush()

    def _replay(self) -> None:
        for path in sorted(self.data_dir.glob("*.jsonl")):
            series_id = path.stem
            reg: SeriesRegistration | None = None
            for line in path.read_text().splitlines():
                event = json.loads(line)
                kind = event["event"]
                if kind == "register":
                    series = validate([(t, v) for t, v in event["points"]])
                    reg = SeriesRegistration(series_id, series, _choice_from(event["choice"]))
                elif reg is None:
                    continue
                elif kind == "append":
                    merged = reg.series.points + [(t, v) for t, v in event["points"]]
                    reg.series = validate(merged)
                elif kind == "choice":
                    reg.choice = _choice_from(event["choice"])
                    reg.feedback_mark = len(reg.feedback)
                elif kind == "feedback":
                    reg.feedback.append(
                        {
                            "index": event["index"],
                            "is_anomaly": event["is_anomaly"],
                            "timestamp": event["timestamp"],
                        }
                    )
            if reg is not None:
                self.registrations[series_id] = reg

    # -- core operations ----------------------------------------------------

    def register(self, series_id: str, points: list[tuple[int, float]]) -> tuple[SeriesRegistration, bool]:
        """Returns (registration, created). Identical re-registration is a no-op."""
        series = validate(points)
        existing = self.registrations.get(series_id)
        if existing is not None:
            same = np.array_equal(existing.series.timestamps, series.timestamps) and np.array_equal(
                existing.series.values, series.values
            )
            if not same:
                raise KeyError("conflict")
            return existing, False
        choice = select_for_series(self.bundle, series, self.omega)
        reg = SeriesRegistration(series_id, series, choice)
        self.registrations[series_id] = reg
        self._log(
            series_id,
            {"event": "register", "points": series.points, "choice": choice.to_dict()},
        )
        return reg, True

    def append(self, series_id: str, points: list[tuple[int, float]]) -> tuple[SeriesRegistration, int]:
        reg = self.registrations[series_id]
        last = int(reg.series.timestamps[-1])
        for t, _ in points:
            if t <= last:
                raise ValueError(f"timestamp {t} does not advance past {last}")
            last = t
        n_before = len(reg.series)
        reg.series = validate(reg.series.points + list(points))
        self._log(series_id, {"event": "append", "points": [(int(t), float(v)) for t, v in points]})
        return reg, n_before

    def detection_state(self, reg: SeriesRegistration, alpha: float | None = None) -> DetectionState:
        n = len(reg.series)
        try:
            output = detect(reg.series, DetectorParams(reg.choice.kind, reg.choice.param))
            raw_labels, scores = output.labels, output.scores
        except TooShort:
            raw_labels = np.zeros(n, dtype=bool)
            scores = np.zeros(n)
        try:
            result = tune(reg.series, raw_labels, reg.alpha if alpha is None else alpha)
            return DetectionState(result.adjusted_labels, raw_labels, scores, result.lower, result.upper)
        except TooShort:
            values = reg.series.values
            return DetectionState(raw_labels, raw_labels, scores, values.copy(), values.copy())

    def trailing_anomaly_rate(self, reg: SeriesRegistration) -> float:
        state = self.detection_state(reg)
        tail = state.labels[-self.policy.window :]
        return float(tail.mean()) if tail.size else 0.0

    def false_alert_rate(self, reg: SeriesRegistration) -> tuple[float, int]:
        """Share of false alerts among feedback items since the last re-selection."""
        items = reg.feedback[reg.feedback_mark :]
        if not items:
            return 0.0, 0
        state = self.detection_state(reg)
        false_alerts = sum(
            1
            for fb in items
            if not fb["is_anomaly"] and fb["index"] < len(state.labels) and state.labels[fb["index"]]
        )
        return false_alerts / len(items), len(items)

    def reselect(self, reg: SeriesRegistration) -> DetectorChoice:
        choice = select_for_series(self.bundle, reg.series, self.omega)
        reg.choice = choice
        reg.feedback_mark = len(reg.feedback)
        self._log(reg.series_id, {"event": "choice", "choice": choice.to_dict()})
        self.export_feedback_labels()
        return choice

    def record_feedback(self, reg: SeriesRegistration, index: int, is_anomaly: bool) -> dict:
        if not 0 <= index < len(reg.series):
            raise ValueError(f"index {index} out of range for series of length {len(reg.series)}")
        state = self.detection_state(reg)
        item = {
            "index": index,
            "is_anomaly": is_anomaly,
            "timestamp": int(time.time()),
        }
        reg.feedback.append(item)
        self._log(reg.series_id, {"event": "feedback", **item})
        is_false_alert = bool(state.labels[index]) and not is_anomaly
        rate, count = self.false_alert_rate(reg)
        triggered = count >= self.policy.min_feedback and rate > self.policy.false_alert_rate_ceiling
        if triggered:
            self.reselect(reg)
        return {
            "false_alert": is_false_alert,
            "false_alert_rate": rate,
            "feedback_count": count,
            "reselection_triggered": triggered,
        }

    def export_feedback_labels(self) -> Path:
        """Write feedback-confirmed labels as a training corpus directory.

        Only points with at least one feedback item and no contradicting
        feedback are exported; the export is a pure function of the logs.
        """
        export_dir = self.data_dir / "feedback_export"
        export_dir.mkdir(exist_ok=True)
        rows = []
        for series_id in sorted(self.registrations):
            reg = self.registrations[series_id]
            if not reg.feedback:
                continue
            verdicts: dict[int, set[bool]] = {}
            for fb in reg.feedback:
                verdicts.setdefault(fb["index"], set()).add(bool(fb["is_anomaly"]))
            confirmed = {i: v.pop() for i, v in sorted(verdicts.items()) if len(v) == 1}
            if not confirmed:
                continue
            with open(export_dir / f"{series_id}.csv", "w") as fh:
                fh.write("timestamp,value\n")
                for t, v in reg.series.points:
                    fh.write(f"{t},{v!r}\n")
            rows.extend((series_id, i, int(flag)) for i, flag in confirmed.items())
        with open(export_dir / "labels.csv", "w") as fh:
            fh.write("series_id,index,is_anomaly\n")
            for series_id, i, flag in rows:
                fh.write(f"{series_id},{i},{flag}\n")
        return export_dir


def _choice_from(doc: dict) -> DetectorChoice:
    return DetectorChoice(
        DetectorKind(doc["kind"]), float(doc["param"]), float(doc["confidence"]), doc["source"]
    )


# ---------------------------------------------------------------------------
# HTTP layer
# ---------------------------------------------------------------------------

class PointIn(BaseModel):
    timestamp: int | float | str
    value: float

    def as_pair(self) -> tuple[int, float]:
        t = self.timestamp
        return (_parse_timestamp(t) if isinstance(t, str) else int(t), float(self.value))


class RegisterIn(BaseModel):
    id: str
    points: list[PointIn]


class AppendIn(BaseModel):
    points: list[PointIn]


class FeedbackIn(BaseModel):
    index: int
    is_anomaly: bool


def _error(status: int, message: str) -> JSONResponse:
    return JSONResponse(
        status_code=status, content={"schema_version": SCHEMA_VERSION, "error": message}
    )


def create_app(
    data_dir: str | Path,
    bundle: SelectorBundle | None = None,
    policy: ReselectionPolicy | None = None,
    omega: int = DEFAULT_WINDOW,
    ui_dir: str | Path | None = None,
) -> FastAPI:
    app = FastAPI(title="tsadkit", version="0.1.0")
    store = SeriesStore(data_dir, bundle=bundle, policy=policy, omega=omega)
    app.state.store = store

    @app.exception_handler(RequestValidationError)
    async def _on_validation_error(request: Request, exc: RequestValidationError):
        return _error(400, f"invalid request: {exc.errors()[:1]}")

    @app.exception_handler(TsadError)
    async def _on_domain_error(request: Request, exc: TsadError):
        return _error(400, str(exc))

    @app.post("/series")
    def register_series(body: RegisterIn):
        if not _ID_PATTERN.match(body.id):
            return _error(400, "series id must match [A-Za-z0-9_.-]{1,128}")
        if not body.points:
            return _error(400, "points must be non-empty")
        with store.lock:
            try:
                reg, created = store.register(body.id, [p.as_pair() for p in body.points])
            except KeyError:
                return _error(409, f"series {body.id!r} already registered with different data")
            return {
                "schema_version": SCHEMA_VERSION,
                "series_id": reg.series_id,
                "created": created,
                "length": len(reg.series),
                "choice": reg.choice.to_dict(),
            }

    @app.post("/series/{series_id}/points")
    def append_points(series_id: str, body: AppendIn):
        with store.lock:
            if series_id not in store.registrations:
                return _error(404, f"unknown series {series_id!r}")
            if not body.points:
                return _error(400, "points must be non-empty")
            try:
                reg, n_before = store.append(series_id, [p.as_pair() for p in body.points])
            except ValueError as exc:
                return _error(400, str(exc))
            state = store.detection_state(reg)
            rate = store.trailing_anomaly_rate(reg)
            triggered = rate > store.policy.anomaly_rate_ceiling
            if triggered:
                store.reselect(reg)
            n_new = len(reg.series) - n_before
            return {
                "schema_version": SCHEMA_VERSION,
                "series_id": series_id,
                "labels": state.labels[-n_new:].tolist(),
                "scores": state.scores[-n_new:].tolist(),
                "band": {
                    "lower": state.lower[-n_new:].tolist(),
                    "upper": state.upper[-n_new:].tolist(),
                },
                "trailing_anomaly_rate": rate,
                "reselection_triggered": triggered,
                "choice": reg.choice.to_dict(),
            }

    @app.get("/series/{series_id}/result")
    def get_result(series_id: str, alpha: float | None = None):
        with store.lock:
            if series_id not in store.registrations:
                return _error(404, f"unknown series {series_id!r}")
            if alpha is not None and not 0.0 <= alpha <= 100.0:
                return _error(400, "alpha must be within [0, 100]")
            reg = store.registrations[series_id]
            state = store.detection_state(reg, alpha)
            return {
                "schema_version": SCHEMA_VERSION,
                "series_id": series_id,
                "alpha": reg.alpha if alpha is None else alpha,
                "choice": reg.choice.to_dict(),
                "points": [{"timestamp": t, "value": v} for t, v in reg.series.points],
                "labels": state.labels.tolist(),
                "scores": state.scores.tolist(),
                "band": {"lower": state.lower.tolist(), "upper": state.upper.tolist()},
            }

    @app.post("/series/{series_id}/feedback")
    def post_feedback(series_id: str, body: FeedbackIn):
        with store.lock:
            if series_id not in store.registrations:
                return _error(404, f"unknown series {series_id!r}")
            reg = store.registrations[series_id]
            try:
                outcome = store.record_feedback(reg, body.index, body.is_anomaly)
            except ValueError as exc:
                return _error(400, str(exc))
            return {
                "schema_version": SCHEMA_VERSION,
                "series_id": series_id,
                "recorded": True,
                "choice": reg.choice.to_dict(),
                **outcome,
            }

    if ui_dir is not None and Path(ui_dir).is_dir():
        app.mount("/ui", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app
