"""Request/response models for the HTTP service."""
from __future__ import annotations

from pydantic import BaseModel, Field


class SimulateRequest(BaseModel):
    seed: int = 0
    condition: str = "nbf"
    duration: float = Field(default=120.0, gt=0)
    policy: str | None = None
    config_text: str = ""


class SimulateResponse(BaseModel):
    outcome: str
    event_count: int
    creature_spawns: int
    files: dict[str, str]


class CalibrateRequest(BaseModel):
    calibration_text: str
    smoothing_window: int = Field(default=5, ge=1)


class ChannelModelOut(BaseModel):
    channel: str
    target: str
    slope: float
    intercept: float
    rss: float
    degenerate: bool


class CalibrateResponse(BaseModel):
    models: list[ChannelModelOut]
    smoothing_window: int


class ClassifyRequest(BaseModel):
    calibration_text: str
    physio_csv: str
    smoothing_window: int = Field(default=5, ge=1)
    window_seconds: float = Field(default=1.0, gt=0)


class ClassifyResponse(BaseModel):
    av_csv: str


class TriangulateRequest(BaseModel):
    trace_csv: str
    events_tsv: str
    mode: str = "deviation"
    window: float = Field(default=10.0, gt=0)
    sigma_multiplier: float = 2.0


class TriangulateResponse(BaseModel):
    responses_csv: str
    session_text: str
    events: int
    responses: int
    simple: int
    composite: int
    response_ratio: float
    problems: list[str]


class ReportRequest(BaseModel):
    events_tsv: str
    av_csv: str
    directives_tsv: str
    outcome_text: str


class ReportResponse(BaseModel):
    report_text: str
