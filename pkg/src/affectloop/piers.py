"""Two-layer emotional-state classifier.

Layer 1 fits one simple linear regression per physiological channel against the
calibration self-reports: skin conductance and heart rate predict arousal, the
two facial EMG channels predict valence (zygomaticus positive, corrugator
negative).  Layer 2 fuses the per-channel predictions with inverse
residual-sum-of-squares weights and smooths the stream with a trailing moving
average.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from enum import Enum

from .core import AffectLoopError, EmotionalState, PhysiologicalSample, clamp_to_scale

#: regularizer added to each RSS before inverting it into a fusion weight
RSS_EPSILON = 1e-6

#: a channel whose calibration feature variance falls below this is degenerate
DEGENERATE_VARIANCE = 1e-12

DEFAULT_SMOOTHING_WINDOW = 5


class CalibrationError(AffectLoopError):
    pass


class FusionError(AffectLoopError):
    pass


class ClassificationError(AffectLoopError):
    pass


class CalibrationPhase(Enum):
    RELAXING_MUSIC = "RelaxingMusic"
    WALDO_SCARE = "WaldoScare"
    FUNNY_VIDEO = "FunnyVideo"
    HORROR_VIDEO = "HorrorVideo"


class Channel(Enum):
    SC = "sc"
    HR = "hr"
    EMG_ZYG = "emg_zyg"
    EMG_CORR = "emg_corr"

    @property
    def feature_name(self) -> str:
        return self.value


class Target(Enum):
    AROUSAL = "arousal"
    VALENCE = "valence"


#: fixed channel -> dimension wiring
CHANNEL_TARGETS: dict[Channel, Target] = {
    Channel.SC: Target.AROUSAL,
    Channel.HR: Target.AROUSAL,
    Channel.EMG_ZYG: Target.VALENCE,
    Channel.EMG_CORR: Target.VALENCE,
}


@dataclass(frozen=True)
class CalibrationRecord:
    """Mean sensor features and the self-reported AV for one calibration phase."""

    phase: CalibrationPhase
    features: PhysiologicalSample
    self_report: EmotionalState


@dataclass(frozen=True)
class ChannelModel:
    """A fitted line from one channel feature to one AV dimension.

    A degenerate model (constant feature across all phases) keeps slope 0 and
    gets weight 0 at fusion.
    """

    channel: Channel
    target: Target
    slope: float
    intercept: float
    rss: float
    degenerate: bool = False

    def predict(self, feature: float) -> float:
        return self.slope * feature + self.intercept

    def invert(self, target_value: float) -> float:
        """Feature value whose prediction equals ``target_value``."""
        if self.degenerate or self.slope == 0.0:
            raise ClassificationError(f"cannot invert degenerate {self.channel} model")
        return (target_value - self.intercept) / self.slope


@dataclass(frozen=True)
class PiersModel:
    channel_models: tuple[ChannelModel, ...]
    smoothing_window: int = DEFAULT_SMOOTHING_WINDOW

    def models_for(self, target: Target) -> list[ChannelModel]:
        return [m for m in self.channel_models if m.target is target]

    def model(self, channel: Channel) -> ChannelModel:
        for m in self.channel_models:
            if m.channel is channel:
                return m
        raise KeyError(channel)


def _least_squares(xs: list[float], ys: list[float]) -> tuple[float, float, float]:
    """Ordinary least squares of y on x; returns (slope, intercept, rss)."""
    n = len(xs)
    mx = sum(xs) / n
    my = sum(ys) / n
    sxx = sum((x - mx) ** 2 for x in xs)
    sxy = sum((x - mx) * (y - my) for x, y in zip(xs, ys))
    slope = sxy / sxx
    intercept = my - slope * mx
    rss = sum((y - (slope * x + intercept)) ** 2 for x, y in zip(xs, ys))
    return slope, intercept, max(rss, 0.0)


def fit_calibration(
    records: list[CalibrationRecord],
    smoothing_window: int = DEFAULT_SMOOTHING_WINDOW,
) -> PiersModel:
    """Fit one line per channel from the calibration phases.

    Needs at least two records.  A channel whose feature is constant across all
    phases is flagged degenerate instead of failing the whole calibration.
    """
    if len(records) < 2:
        raise CalibrationError(f"need >= 2 calibration records, got {len(records)}")
    if smoothing_window < 1:
        raise CalibrationError(f"smoothing window must be >= 1, got {smoothing_window}")
    models = []
    for channel, target in CHANNEL_TARGETS.items():
        xs = [getattr(r.features, channel.feature_name) for r in records]
        ys = [getattr(r.self_report, target.value) for r in records]
        n = len(xs)
        variance = sum((x - sum(xs) / n) ** 2 for x in xs) / n
        if variance < DEGENERATE_VARIANCE:
            models.append(
                ChannelModel(channel, target, 0.0, sum(ys) / n, math.inf, degenerate=True)
            )
            continue
        slope, intercept, rss = _least_squares(xs, ys)
        models.append(ChannelModel(channel, target, slope, intercept, rss))
    return PiersModel(channel_models=tuple(models), smoothing_window=smoothing_window)


def fuse(predictions: list[tuple[float, float]]) -> float:
    """Weighted mean of (value, rss) pairs with weights proportional to
    1 / (rss + epsilon).

    Entries with an infinite or NaN rss are treated as degenerate and excluded.
    Raises FusionError when nothing usable remains.
    """
    usable = [(v, r) for v, r in predictions if math.isfinite(r) and r >= 0]
    if not usable:
        raise FusionError("no usable predictions to fuse")
    weights = [1.0 / (r + RSS_EPSILON) for _, r in usable]
    total = sum(weights)
    return sum(w * v for w, (v, _) in zip(weights, usable)) / total


def _mean_features(window: list[PhysiologicalSample]) -> dict[Channel, float]:
    n = len(window)
    return {
        c: sum(getattr(s, c.feature_name) for s in window) / n for c in Channel
    }


class PiersClassifier:
    """Streaming classifier: one instance per stream, not shared across threads.

    Each call classifies the current sample window and returns the smoothed
    output (trailing moving average over the last ``smoothing_window``
    classifications, including the current one).
    """

    def __init__(self, model: PiersModel):
        self.model = model
        self._history: deque[tuple[float, float]] = deque(maxlen=model.smoothing_window)

    def classify(self, window: list[PhysiologicalSample]) -> EmotionalState:
        if not window:
            raise ClassificationError("classification window is empty")
        feats = _mean_features(window)
        raw = {}
        for target in Target:
            preds = [
                (m.predict(feats[m.channel]), m.rss)
                for m in self.model.models_for(target)
                if not m.degenerate
            ]
            if not preds:
                raise ClassificationError(f"all {target.value} channel models degenerate")
            raw[target] = clamp_to_scale(fuse(preds))
        self._history.append((raw[Target.AROUSAL], raw[Target.VALENCE]))
        n = len(self._history)
        a = sum(h[0] for h in self._history) / n
        v = sum(h[1] for h in self._history) / n
        return EmotionalState(arousal=a, valence=v)

    def reset(self) -> None:
        self._history.clear()


def classify(window: list[PhysiologicalSample], model: PiersModel) -> EmotionalState:
    """One-shot classification (fresh smoothing buffer)."""
    return PiersClassifier(model).classify(window)


# --- calibration file format -------------------------------------------------
# one line per phase: phase,sc,hr,emg_zyg,emg_corr,arousal,valence

def parse_calibration(text: str) -> list[CalibrationRecord]:
    records = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = [p.strip() for p in line.split(",")]
        if len(parts) != 7:
            raise CalibrationError(f"line {lineno}: expected 7 fields, got {len(parts)}")
        try:
            phase = CalibrationPhase(parts[0])
            sc, hr, zyg, corr, arousal, valence = (float(p) for p in parts[1:])
        except (ValueError, KeyError) as exc:
            raise CalibrationError(f"line {lineno}: {exc}") from exc
        records.append(
            CalibrationRecord(
                phase=phase,
                features=PhysiologicalSample(0.0, sc, hr, zyg, corr),
                self_report=EmotionalState(arousal, valence),
            )
        )
    return records


def format_calibration(records: list[CalibrationRecord]) -> str:
    lines = [
        f"{r.phase.value},{r.features.sc!r},{r.features.hr!r},"
        f"{r.features.emg_zyg!r},{r.features.emg_corr!r},"
        f"{r.self_report.arousal!r},{r.self_report.valence!r}"
        for r in records
    ]
    return "\n".join(lines) + ("\n" if lines else "")
