"""Offline emotion-event triangulation.

Pairs logged game events with the emotional responses visible in the recorded
arousal/valence trace.  For each event a time region is cut from the trace
(capped by the next event and by a fixed window), a response threshold phi is
derived from the region, the trace's zero-slope extrema are located, and a
chain of threshold-sized swings starting from the state at the event instant
is accepted as the response.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from enum import Enum

from .core import AffectLoopError

DEFAULT_WINDOW = 10.0  # seconds
DEFAULT_SIGMA_MULTIPLIER = 2.0

#: log kinds treated as emotional stimuli by default
STIMULUS_KINDS = (
    "EnvEvent",
    "CreatureSpawn",
    "CreatureChaseStart",
    "CreatureRetreat",
    "FolderPickup",
    "Faint",
)

EET_MAGIC = "EETv1"


class EetError(AffectLoopError):
    pass


class EetFormatError(EetError):
    pass


class EetVersionError(EetFormatError):
    pass


class ThresholdMode(Enum):
    LITERAL = "literal"      # mu + k*sigma of the raw region values
    DEVIATION = "deviation"  # mu + k*sigma of the |first differences|


@dataclass(frozen=True)
class ThresholdParams:
    mode: ThresholdMode = ThresholdMode.DEVIATION
    sigma_multiplier: float = DEFAULT_SIGMA_MULTIPLIER


@dataclass(frozen=True)
class TimeRegion:
    start: float
    end: float

    def contains(self, t: float) -> bool:
        return self.start <= t <= self.end


def time_regions(event_times: list[float], trace_end: float,
                 window: float = DEFAULT_WINDOW) -> list[TimeRegion]:
    """One region per event: from the event until the next event or the window
    end, whichever is first; the last region is capped by the trace end."""
    regions = []
    for i, t in enumerate(event_times):
        end = t + window
        if i + 1 < len(event_times):
            end = min(end, event_times[i + 1])
        else:
            end = min(end, trace_end)
        regions.append(TimeRegion(t, max(t, end)))
    return regions


def _mean_std(values: list[float]) -> tuple[float, float]:
    n = len(values)
    mu = sum(values) / n
    var = sum((v - mu) ** 2 for v in values) / n  # population std
    return mu, math.sqrt(var)


def compute_phi(values: list[float], params: ThresholdParams = ThresholdParams()) -> float:
    """Response threshold for one region's sample values."""
    if params.mode is ThresholdMode.LITERAL:
        if not values:
            return math.inf
        mu, sigma = _mean_std(values)
        return mu + params.sigma_multiplier * sigma
    diffs = [abs(b - a) for a, b in zip(values, values[1:])]
    if not diffs:
        return math.inf
    mu, sigma = _mean_std(diffs)
    return mu + params.sigma_multiplier * sigma


@dataclass(frozen=True)
class Extremum:
    index: int      # sample index within the region
    time: float
    value: float
    polarity: int   # +1 local maximum, -1 local minimum


def find_extrema(times: list[float], values: list[float]) -> list[Extremum]:
    """Zero crossings of the discrete first difference; a zero-slope plateau
    between opposite slopes collapses to its midpoint sample."""
    extrema = []
    prev_sign = 0
    prev_end = -1  # sample index ending the last nonzero difference
    for i, (a, b) in enumerate(zip(values, values[1:])):
        d = b - a
        s = 1 if d > 0 else (-1 if d < 0 else 0)
        if s == 0:
            continue
        if prev_sign != 0 and s != prev_sign:
            idx = (prev_end + i) // 2
            extrema.append(Extremum(idx, times[idx], values[idx], prev_sign))
        prev_sign = s
        prev_end = i + 1
    return extrema


@dataclass(frozen=True)
class AcceptedExtremum:
    time: float
    value: float       # ZS: the zero-slope sample value
    initial: float     # IS: the reference the swing was measured from
    polarity: int

    @property
    def delta(self) -> float:
        return self.value - self.initial


class ResponseKind(Enum):
    SIMPLE = "Simple"
    COMPOSITE = "Composite"


@dataclass(frozen=True)
class EmotionalResponse:
    event_time: float
    event_kind: str
    dimension: str
    region: TimeRegion
    phi: float
    extrema: tuple[AcceptedExtremum, ...]

    @property
    def kind(self) -> ResponseKind:
        return ResponseKind.SIMPLE if len(self.extrema) == 1 else ResponseKind.COMPOSITE


def _sample_at_or_before(times: list[float], values: list[float], t: float) -> float | None:
    best = None
    for ts, v in zip(times, values):
        if ts > t:
            break
        best = v
    return best


def detect_region_response(times: list[float], values: list[float],
                           region: TimeRegion, initial: float,
                           params: ThresholdParams = ThresholdParams(),
                           fixed_phi: float | None = None,
                           ) -> tuple[float, tuple[AcceptedExtremum, ...]]:
    """Chained threshold acceptance inside one region.

    Starting from the initial state, each extremum whose swing from the last
    accepted value reaches phi is accepted and becomes the new reference;
    successive accepted extrema must alternate polarity.  Returns (phi,
    accepted extrema).
    """
    idx = [i for i, t in enumerate(times) if region.contains(t)]
    r_times = [times[i] for i in idx]
    r_values = [values[i] for i in idx]
    phi = fixed_phi if fixed_phi is not None else compute_phi(r_values, params)
    accepted: list[AcceptedExtremum] = []
    reference = initial
    last_polarity = 0
    for ext in find_extrema(r_times, r_values):
        if last_polarity != 0 and ext.polarity == last_polarity:
            continue
        if abs(reference - ext.value) >= phi:
            accepted.append(AcceptedExtremum(ext.time, ext.value, reference, ext.polarity))
            reference = ext.value
            last_polarity = ext.polarity
    return phi, tuple(accepted)


def detect_responses(times: list[float], values: list[float],
                     events: list[tuple[float, str]], dimension: str,
                     window: float = DEFAULT_WINDOW,
                     params: ThresholdParams = ThresholdParams(),
                     fixed_phi: float | None = None) -> list[EmotionalResponse]:
    """All detected responses of one trace dimension to a sorted event list."""
    if not times:
        return []
    if any(b < a for a, b in zip(times, times[1:])):
        raise EetError("trace timestamps must be non-decreasing")
    event_times = [t for t, _ in events]
    if any(b < a for a, b in zip(event_times, event_times[1:])):
        raise EetError("event timestamps must be non-decreasing")
    responses = []
    regions = time_regions(event_times, times[-1], window)
    for (event_time, kind), region in zip(events, regions):
        initial = _sample_at_or_before(times, values, event_time)
        if initial is None:
            continue  # event precedes the trace
        phi, accepted = detect_region_response(times, values, region, initial,
                                               params, fixed_phi)
        if accepted:
            responses.append(EmotionalResponse(event_time, kind, dimension,
                                               region, phi, accepted))
    return responses


def triangulate(times: list[float], dimensions: dict[str, list[float]],
                events: list[tuple[float, str]],
                window: float = DEFAULT_WINDOW,
                params: ThresholdParams = ThresholdParams()) -> list[EmotionalResponse]:
    """Run detection over every trace dimension; responses are returned ordered
    by event time, with dimensions in the given order for the same event."""
    per_dim = {
        dim: detect_responses(times, vals, events, dim, window, params)
        for dim, vals in dimensions.items()
    }
    order = {dim: i for i, dim in enumerate(dimensions)}
    responses = [r for rs in per_dim.values() for r in rs]
    responses.sort(key=lambda r: (r.event_time, order[r.dimension]))
    return responses


# --- statistics -----------------------------------------------------------------

@dataclass(frozen=True)
class ResponseStats:
    events: int
    responses: int
    simple: int
    composite: int

    @property
    def response_ratio(self) -> float:
        return self.responses / self.events

    @property
    def simple_fraction(self) -> float:
        return self.simple / self.responses if self.responses else 0.0


def response_stats(event_count: int, responses: list[EmotionalResponse]) -> ResponseStats:
    if event_count <= 0:
        raise EetError("cannot compute statistics without events")
    simple = sum(1 for r in responses if r.kind is ResponseKind.SIMPLE)
    return ResponseStats(event_count, len(responses), simple, len(responses) - simple)


# --- file formats -----------------------------------------------------------------

def import_events(text: str, kinds: tuple[str, ...] = STIMULUS_KINDS,
                  ) -> tuple[list[tuple[float, str]], list[str]]:
    """Parse an exported event log leniently.

    Returns (events, problems); malformed lines are reported with their line
    number instead of aborting the import.
    """
    events = []
    problems = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) < 2:
            problems.append(f"line {lineno}: expected tab-separated fields")
            continue
        try:
            timestamp = float(parts[0])
        except ValueError:
            problems.append(f"line {lineno}: bad timestamp {parts[0]!r}")
            continue
        kind = parts[1].strip()
        if not kind:
            problems.append(f"line {lineno}: empty event kind")
            continue
        if kinds is None or kind in kinds:
            events.append((timestamp, kind))
    if any(b < a for (a, _), (b, _) in zip(events, events[1:])):
        problems.append("events are not sorted by timestamp")
        events.sort(key=lambda e: e[0])
    return events, problems


def read_trace(text: str) -> tuple[list[float], dict[str, list[float]]]:
    """Parse a ``t,arousal,valence`` CSV trace (header optional)."""
    times: list[float] = []
    arousal: list[float] = []
    valence: list[float] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = [p.strip() for p in line.split(",")]
        if lineno == 1 and parts and not _is_number(parts[0]):
            continue  # header
        if len(parts) != 3:
            raise EetFormatError(f"line {lineno}: expected t,arousal,valence")
        try:
            t, a, v = (float(p) for p in parts)
        except ValueError as exc:
            raise EetFormatError(f"line {lineno}: {exc}") from exc
        times.append(t)
        arousal.append(a)
        valence.append(v)
    return times, {"arousal": arousal, "valence": valence}


def _is_number(s: str) -> bool:
    try:
        float(s)
        return True
    except ValueError:
        return False


RESPONSE_CSV_HEADER = ("event_ts,event_kind,dimension,response_index,"
                       "extremum_index,extremum_ts,is_value,zs_value,delta,kind")


def export_responses(responses: list[EmotionalResponse]) -> str:
    """One CSV row per accepted extremum."""
    lines = [RESPONSE_CSV_HEADER]
    for ri, r in enumerate(responses):
        for ei, ext in enumerate(r.extrema):
            lines.append(
                f"{r.event_time!r},{r.event_kind},{r.dimension},{ri},{ei},"
                f"{ext.time!r},{ext.initial!r},{ext.value!r},{ext.delta!r},"
                f"{r.kind.value}"
            )
    return "\n".join(lines) + "\n"


def save_session(times: list[float], dimensions: dict[str, list[float]],
                 events: list[tuple[float, str]],
                 responses: list[EmotionalResponse],
                 params: ThresholdParams = ThresholdParams(),
                 window: float = DEFAULT_WINDOW) -> str:
    """Serialize a triangulation session (inputs and results) as text."""
    payload = {
        "window": window,
        "params": {"mode": params.mode.value,
                   "sigma_multiplier": params.sigma_multiplier},
        "times": times,
        "dimensions": dimensions,
        "events": [[t, k] for t, k in events],
        "responses": [
            {
                "event_time": r.event_time,
                "event_kind": r.event_kind,
                "dimension": r.dimension,
                "region": [r.region.start, r.region.end],
                "phi": r.phi,
                "extrema": [
                    [e.time, e.value, e.initial, e.polarity] for e in r.extrema
                ],
            }
            for r in responses
        ],
    }
    return EET_MAGIC + "\n" + json.dumps(payload, sort_keys=True) + "\n"


def load_session(text: str):
    """Inverse of save_session; validates the version header and structure."""
    lines = text.split("\n", 1)
    if not lines or lines[0].strip() != EET_MAGIC:
        head = lines[0].strip() if lines else ""
        if head.startswith("EETv"):
            raise EetVersionError(f"unsupported version header {head!r}")
        raise EetFormatError("missing EETv1 header")
    try:
        payload = json.loads(lines[1])
        window = float(payload["window"])
        params = ThresholdParams(
            mode=ThresholdMode(payload["params"]["mode"]),
            sigma_multiplier=float(payload["params"]["sigma_multiplier"]),
        )
        times = [float(t) for t in payload["times"]]
        dimensions = {
            str(dim): [float(v) for v in vals]
            for dim, vals in payload["dimensions"].items()
        }
        events = [(float(t), str(k)) for t, k in payload["events"]]
        responses = [
            EmotionalResponse(
                event_time=float(r["event_time"]),
                event_kind=str(r["event_kind"]),
                dimension=str(r["dimension"]),
                region=TimeRegion(float(r["region"][0]), float(r["region"][1])),
                phi=float(r["phi"]),
                extrema=tuple(
                    AcceptedExtremum(float(t), float(v), float(i), int(p))
                    for t, v, i, p in r["extrema"]
                ),
            )
            for r in payload["responses"]
        ]
    except (KeyError, IndexError, TypeError, ValueError, json.JSONDecodeError) as exc:
        raise EetFormatError(f"corrupt session payload: {exc}") from exc
    return times, dimensions, events, responses, params, window
