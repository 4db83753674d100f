"""Shared domain types: the arousal/valence scale, sensor samples, traces and the
session clock.

Everything here is immutable after construction and safe to share between
threads.  Timestamps are seconds as floats relative to the session start; one
session has exactly one clock.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

AV_MIN = 0.0
AV_MAX = 10.0
AV_NEUTRAL = 5.0

#: tolerance for the trace sample-spacing invariant
SPACING_TOL = 1e-9


class AffectLoopError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(AffectLoopError):
    """A value violates a domain invariant (non-finite, negative time, ...)."""


def clamp_to_scale(x: float) -> float:
    """Clamp ``x`` onto the arousal/valence scale [0, 10].

    Raises DomainError for NaN or infinite input.
    """
    if not math.isfinite(x):
        raise DomainError(f"cannot clamp non-finite value {x!r}")
    return min(AV_MAX, max(AV_MIN, x))


@dataclass(frozen=True)
class EmotionalState:
    """A point in arousal/valence space, always within [0, 10] on both axes."""

    arousal: float
    valence: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "arousal", clamp_to_scale(float(self.arousal)))
        object.__setattr__(self, "valence", clamp_to_scale(float(self.valence)))


@dataclass(frozen=True)
class PhysiologicalSample:
    """One timestamped multi-channel sensor reading.

    Channels are engineered features, not raw voltages: skin conductance in
    microsiemens, heart rate in BPM and two normalized facial EMG activations
    (zygomaticus major / corrugator supercilii).
    """

    timestamp: float
    sc: float
    hr: float
    emg_zyg: float
    emg_corr: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.timestamp) or self.timestamp < 0:
            raise DomainError(f"bad sample timestamp {self.timestamp!r}")
        if not math.isfinite(self.sc) or self.sc < 0:
            raise DomainError(f"skin conductance must be >= 0, got {self.sc!r}")
        if not math.isfinite(self.hr) or self.hr <= 0:
            raise DomainError(f"heart rate must be > 0, got {self.hr!r}")
        for name in ("emg_zyg", "emg_corr"):
            v = getattr(self, name)
            if not math.isfinite(v) or not (0.0 <= v <= 1.0):
                raise DomainError(f"{name} must be in [0, 1], got {v!r}")


@dataclass(frozen=True)
class AvTrace:
    """A uniformly sampled arousal/valence time series.

    ``samples`` is an ordered tuple of (timestamp, EmotionalState); spacing must
    equal ``sample_period`` within 1e-9 and timestamps must be strictly
    increasing.
    """

    samples: tuple[tuple[float, EmotionalState], ...]
    sample_period: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "samples", tuple(self.samples))
        if self.sample_period <= 0 or not math.isfinite(self.sample_period):
            raise DomainError(f"bad sample period {self.sample_period!r}")
        prev = None
        for t, _state in self.samples:
            if not math.isfinite(t) or t < 0:
                raise DomainError(f"bad trace timestamp {t!r}")
            if prev is not None:
                if t <= prev:
                    raise DomainError("trace timestamps must be strictly increasing")
                if abs((t - prev) - self.sample_period) > SPACING_TOL:
                    raise DomainError(
                        f"trace spacing {t - prev!r} != sample period "
                        f"{self.sample_period!r}"
                    )
            prev = t

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def start(self) -> float:
        return self.samples[0][0]

    @property
    def end(self) -> float:
        return self.samples[-1][0]

    def times(self) -> list[float]:
        return [t for t, _ in self.samples]

    def dimension(self, name: str) -> list[float]:
        """Values of one dimension ('arousal' or 'valence') in sample order."""
        return [getattr(s, name) for _, s in self.samples]


def align_trace(trace: AvTrace, offset: float) -> AvTrace:
    """Shift every timestamp of ``trace`` by ``offset`` seconds.

    Used to synchronise the classification clock with the event-log clock.
    Raises DomainError if the shift would produce a negative timestamp.
    """
    if not math.isfinite(offset):
        raise DomainError(f"non-finite alignment offset {offset!r}")
    if len(trace) and trace.start + offset < 0:
        raise DomainError(
            f"offset {offset!r} would shift trace start {trace.start!r} below zero"
        )
    shifted = tuple((t + offset, s) for t, s in trace.samples)
    return AvTrace(samples=shifted, sample_period=trace.sample_period)


@dataclass(frozen=True)
class SimClock:
    """Discrete session clock: time = tick * tick_period."""

    tick: int = 0
    tick_period: float = 0.1

    def __post_init__(self) -> None:
        if self.tick < 0:
            raise DomainError(f"tick must be non-negative, got {self.tick}")
        if self.tick_period <= 0:
            raise DomainError(f"tick period must be positive, got {self.tick_period}")

    @property
    def time(self) -> float:
        return self.tick * self.tick_period

    def advanced(self, ticks: int = 1) -> "SimClock":
        return SimClock(tick=self.tick + ticks, tick_period=self.tick_period)
