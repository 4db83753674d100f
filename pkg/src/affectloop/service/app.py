"""FastAPI application exposing the pipeline.

Error contract: domain failures surface as HTTP 422 with a detail of
``{"code": "parse" | "runtime", "message": ...}`` so thin clients can map them
onto process exit codes without string matching.
"""
from __future__ import annotations

import dataclasses

from fastapi import FastAPI, HTTPException

from .. import clears, eet, piers, report, simulator
from ..config import ConfigError, ScenarioConfig, load_config
from ..core import AffectLoopError, DomainError
from . import schemas

#: error types caused by malformed input rather than a failing run
PARSE_ERRORS = (
    ConfigError,
    piers.CalibrationError,
    eet.EetFormatError,
    report.ReportError,
    DomainError,
)


def _http_error(exc: Exception) -> HTTPException:
    code = "parse" if isinstance(exc, PARSE_ERRORS) else "runtime"
    return HTTPException(status_code=422, detail={"code": code, "message": str(exc)})


def _build_scenario(req: schemas.SimulateRequest) -> ScenarioConfig:
    cfg = load_config(req.config_text, ScenarioConfig())
    try:
        condition = clears.Condition(req.condition.lower())
    except ValueError as exc:
        raise ConfigError(f"unknown condition {req.condition!r}") from exc
    player = cfg.player
    if req.policy is not None:
        if req.policy not in ("explorer", "objective_seeker", "fleer"):
            raise ConfigError(f"unknown policy {req.policy!r}")
        player = dataclasses.replace(player, policy=req.policy)
    return dataclasses.replace(cfg, seed=req.seed, condition=condition,
                               duration=req.duration, player=player)


def create_app() -> FastAPI:
    app = FastAPI(title="affectloop", version="0.1.0")

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok"}

    @app.post("/simulate", response_model=schemas.SimulateResponse)
    def simulate(req: schemas.SimulateRequest) -> schemas.SimulateResponse:
        try:
            config = _build_scenario(req)
            record = simulator.run(config)
        except AffectLoopError as exc:
            raise _http_error(exc) from exc
        return schemas.SimulateResponse(
            outcome=record.outcome.value,
            event_count=len(record.events),
            creature_spawns=record.creature_spawns,
            files=record.files(),
        )

    @app.post("/calibrate", response_model=schemas.CalibrateResponse)
    def calibrate(req: schemas.CalibrateRequest) -> schemas.CalibrateResponse:
        try:
            records = piers.parse_calibration(req.calibration_text)
            model = piers.fit_calibration(records, req.smoothing_window)
        except AffectLoopError as exc:
            raise _http_error(exc) from exc
        return schemas.CalibrateResponse(
            models=[
                schemas.ChannelModelOut(
                    channel=m.channel.value, target=m.target.value, slope=m.slope,
                    intercept=m.intercept, rss=m.rss, degenerate=m.degenerate,
                )
                for m in model.channel_models
            ],
            smoothing_window=model.smoothing_window,
        )

    @app.post("/classify", response_model=schemas.ClassifyResponse)
    def classify(req: schemas.ClassifyRequest) -> schemas.ClassifyResponse:
        try:
            records = piers.parse_calibration(req.calibration_text)
            model = piers.fit_calibration(records, req.smoothing_window)
            samples = _parse_physio(req.physio_csv)
            classifier = piers.PiersClassifier(model)
            lines = ["t,arousal,valence"]
            window: list = []
            window_len = 1
            if len(samples) > 1:
                spacing = samples[1].timestamp - samples[0].timestamp
                if spacing > 0:
                    window_len = max(1, round(req.window_seconds / spacing))
            for s in samples:
                window.append(s)
                if len(window) > window_len:
                    window.pop(0)
                es = classifier.classify(window)
                lines.append(f"{s.timestamp!r},{es.arousal!r},{es.valence!r}")
        except AffectLoopError as exc:
            raise _http_error(exc) from exc
        return schemas.ClassifyResponse(av_csv="\n".join(lines) + "\n")

    @app.post("/triangulate", response_model=schemas.TriangulateResponse)
    def triangulate(req: schemas.TriangulateRequest) -> schemas.TriangulateResponse:
        try:
            try:
                mode = eet.ThresholdMode(req.mode.lower())
            except ValueError as exc:
                raise eet.EetFormatError(f"unknown mode {req.mode!r}") from exc
            params = eet.ThresholdParams(mode=mode,
                                         sigma_multiplier=req.sigma_multiplier)
            times, dims = eet.read_trace(req.trace_csv)
            events, problems = eet.import_events(req.events_tsv)
            responses = eet.triangulate(times, dims, events, req.window, params)
            stats = (eet.response_stats(len(events), responses)
                     if events else None)
            session_text = eet.save_session(times, dims, events, responses,
                                            params, req.window)
        except AffectLoopError as exc:
            raise _http_error(exc) from exc
        return schemas.TriangulateResponse(
            responses_csv=eet.export_responses(responses),
            session_text=session_text,
            events=len(events),
            responses=len(responses),
            simple=stats.simple if stats else 0,
            composite=stats.composite if stats else 0,
            response_ratio=stats.response_ratio if stats else 0.0,
            problems=problems,
        )

    @app.post("/report", response_model=schemas.ReportResponse)
    def session_report(req: schemas.ReportRequest) -> schemas.ReportResponse:
        try:
            text = report.session_report(req.events_tsv, req.av_csv,
                                         req.directives_tsv, req.outcome_text)
        except AffectLoopError as exc:
            raise _http_error(exc) from exc
        return schemas.ReportResponse(report_text=text)

    return app


def _parse_physio(text: str):
    from ..core import PhysiologicalSample

    samples = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        parts = [p.strip() for p in line.split(",")]
        if lineno == 1 and parts and not _is_number(parts[0]):
            continue  # header
        if len(parts) != 5:
            raise piers.CalibrationError(
                f"physio line {lineno}: expected t,sc,hr,emg_zyg,emg_corr"
            )
        try:
            t, sc, hr, zyg, corr = (float(p) for p in parts)
        except ValueError as exc:
            raise piers.CalibrationError(f"physio line {lineno}: {exc}") from exc
        samples.append(PhysiologicalSample(t, sc, hr, zyg, corr))
    return samples


def _is_number(s: str) -> bool:
    try:
        float(s)
        return True
    except ValueError:
        return False
