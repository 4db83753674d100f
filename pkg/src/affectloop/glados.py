"""Execution layer: applies decision directives to the live game parameters and
keeps the canonical timestamped event log.

The log is the interface to the offline triangulation tool; the export is a
tab-separated text format that round-trips losslessly.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from . import clears
from .core import AffectLoopError


class LoggingError(AffectLoopError):
    pass


#: event kinds appearing in the log
EVENT_KINDS = (
    "EnvEvent",
    "CreatureSpawn",
    "CreatureChaseStart",
    "CreatureRetreat",
    "FolderPickup",
    "Faint",
    "SanityLevelUp",
    "BlockSpawn",
    "Win",
    "Lose",
)


def format_timestamp(t: float) -> str:
    """Decimal seconds with at most 3 fractional digits, no trailing zeros."""
    s = f"{t:.3f}".rstrip("0").rstrip(".")
    return s if s else "0"


@dataclass(frozen=True)
class EventRecord:
    timestamp: float
    kind: str
    params: tuple[tuple[str, str], ...] = ()
    comment: str = ""

    @staticmethod
    def make(timestamp: float, kind: str, comment: str = "", **params) -> "EventRecord":
        return EventRecord(
            timestamp=timestamp,
            kind=kind,
            params=tuple((k, str(v)) for k, v in params.items()),
            comment=comment,
        )

    def param(self, key: str, default: str | None = None) -> str | None:
        for k, v in self.params:
            if k == key:
                return v
        return default


class EventLog:
    """Append-only sequence of records with non-decreasing timestamps."""

    def __init__(self) -> None:
        self.records: list[EventRecord] = []

    def __len__(self) -> int:
        return len(self.records)

    def log_event(self, record: EventRecord) -> None:
        if self.records and record.timestamp < self.records[-1].timestamp:
            raise LoggingError(
                f"timestamp regression: {record.timestamp} after "
                f"{self.records[-1].timestamp}"
            )
        self.records.append(record)


def export_log(records: list[EventRecord]) -> str:
    """One line per record: timestamp<TAB>kind<TAB>k=v;k=v<TAB>comment."""
    lines = []
    for r in records:
        params = ";".join(f"{k}={v}" for k, v in r.params)
        lines.append(f"{format_timestamp(r.timestamp)}\t{r.kind}\t{params}\t{r.comment}")
    return "\n".join(lines) + ("\n" if lines else "")


class DirectiveSink:
    """Most-recent effective parameter per directive category.

    The faint is edge-triggered: one TriggerFaint is consumed per excursion
    above the threshold, and the trigger re-arms only once a decision cycle
    arrives without a TriggerFaint (arousal back below threshold).
    """

    def __init__(self) -> None:
        self.creature_scale = 1.0
        self.env_scale = 1.0
        self.key_room_factor = 1.0
        self.exit_room_factor = 1.0
        self.evasion_factor = 1.0
        self.sprint_speed_mult = 1.0
        self.sprint_duration_mult = 1.0
        self.heartbeat = 0.0
        self.hallucinations = False
        self.breathing_scared = False
        self.tunnel_vision = 0.0
        self.faint_pending = False
        self._faint_armed = True

    def apply(self, directives: list[clears.Directive]) -> None:
        saw_faint = False
        for d in directives:
            if isinstance(d, clears.ScaleCreatureProbability):
                self.creature_scale = d.factor
            elif isinstance(d, clears.ScaleEnvEventProbability):
                self.env_scale = d.factor
            elif isinstance(d, clears.ScaleObjectiveRoomWeight):
                if d.target == "key_rooms":
                    self.key_room_factor = d.factor
                    self.exit_room_factor = 1.0
                else:
                    self.exit_room_factor = d.factor
                    self.key_room_factor = 1.0
            elif isinstance(d, clears.ScaleEvasionTunnelWeight):
                self.evasion_factor = d.factor
            elif isinstance(d, clears.SetSprintParams):
                self.sprint_speed_mult = d.speed_mult
                self.sprint_duration_mult = d.duration_mult
            elif isinstance(d, clears.SetHeartbeatIntensity):
                self.heartbeat = d.intensity
            elif isinstance(d, clears.SetHallucinations):
                self.hallucinations = d.on
            elif isinstance(d, clears.SetBreathing):
                self.breathing_scared = d.scared
            elif isinstance(d, clears.SetTunnelVision):
                self.tunnel_vision = d.intensity
            elif isinstance(d, clears.TriggerFaint):
                saw_faint = True
        if saw_faint:
            if self._faint_armed:
                self.faint_pending = True
                self._faint_armed = False
        else:
            self._faint_armed = True

    def consume_faint(self) -> bool:
        if self.faint_pending:
            self.faint_pending = False
            return True
        return False
