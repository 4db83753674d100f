"""Per-session text summary computed from a written session directory."""
from __future__ import annotations

import math

from .core import AffectLoopError
from .eet import read_trace


class ReportError(AffectLoopError):
    pass


def _mean_std(values: list[float]) -> tuple[float, float]:
    n = len(values)
    mu = sum(values) / n
    return mu, math.sqrt(sum((v - mu) ** 2 for v in values) / n)


def session_report(events_tsv: str, av_csv: str, directives_tsv: str,
                   outcome_text: str) -> str:
    """Outcome, event counts by kind, AV mean/std, directive counts."""
    outcome = outcome_text.strip()
    if outcome not in ("Win", "Lose", "Ongoing"):
        raise ReportError(f"unrecognized outcome {outcome!r}")

    event_counts: dict[str, int] = {}
    for lineno, line in enumerate(events_tsv.splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) < 2:
            raise ReportError(f"events line {lineno}: expected tab-separated fields")
        event_counts[parts[1]] = event_counts.get(parts[1], 0) + 1

    directive_counts: dict[str, int] = {}
    for lineno, line in enumerate(directives_tsv.splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) < 2:
            raise ReportError(f"directives line {lineno}: expected tab-separated fields")
        directive_counts[parts[1]] = directive_counts.get(parts[1], 0) + 1

    times, dims = read_trace(av_csv)
    if not times:
        raise ReportError("empty AV trace")
    mean_a, std_a = _mean_std(dims["arousal"])
    mean_v, std_v = _mean_std(dims["valence"])

    lines = [f"outcome: {outcome}"]
    lines.append(f"ticks: {len(times)}")
    lines.append(f"arousal: mean={mean_a:.4f} std={std_a:.4f}")
    lines.append(f"valence: mean={mean_v:.4f} std={std_v:.4f}")
    lines.append(f"events: {sum(event_counts.values())}")
    for kind in sorted(event_counts):
        lines.append(f"  {kind}: {event_counts[kind]}")
    lines.append(f"directives: {sum(directive_counts.values())}")
    for name in sorted(directive_counts):
        lines.append(f"  {name}: {directive_counts[name]}")
    return "\n".join(lines) + "\n"
