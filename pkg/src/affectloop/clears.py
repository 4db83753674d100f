"""Decision layer: maps the current emotional state to gameplay directives.

Three session conditions: N-BF emits nothing, NV-IBF steers hidden mechanics
(creature/event probabilities, objective-room and evasion-tunnel weights)
toward a neutral emotional state, V-IBF reflects the state in player-visible
character mechanics (sprint, heartbeat, faint, hallucinations, breathing,
tunnel vision).

All modulation is linear in the deviation from the neutral baseline, with
factors clamped to a configured band so the game balance cannot break.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .core import EmotionalState


class Condition(Enum):
    NBF = "nbf"
    VIBF = "vibf"
    NVIBF = "nvibf"


@dataclass(frozen=True)
class NeutralBaseline:
    arousal0: float = 5.0
    valence0: float = 5.0


# --- directives -----------------------------------------------------------------

@dataclass(frozen=True)
class ScaleCreatureProbability:
    factor: float


@dataclass(frozen=True)
class ScaleEnvEventProbability:
    factor: float


@dataclass(frozen=True)
class ScaleObjectiveRoomWeight:
    factor: float
    target: str  # "key_rooms" | "exit_room"


@dataclass(frozen=True)
class ScaleEvasionTunnelWeight:
    factor: float


@dataclass(frozen=True)
class SetSprintParams:
    speed_mult: float
    duration_mult: float


@dataclass(frozen=True)
class SetHeartbeatIntensity:
    intensity: float


@dataclass(frozen=True)
class TriggerFaint:
    pass


@dataclass(frozen=True)
class SetHallucinations:
    on: bool


@dataclass(frozen=True)
class SetBreathing:
    scared: bool


@dataclass(frozen=True)
class SetTunnelVision:
    intensity: float


Directive = (
    ScaleCreatureProbability
    | ScaleEnvEventProbability
    | ScaleObjectiveRoomWeight
    | ScaleEvasionTunnelWeight
    | SetSprintParams
    | SetHeartbeatIntensity
    | TriggerFaint
    | SetHallucinations
    | SetBreathing
    | SetTunnelVision
)


@dataclass(frozen=True)
class ClearsParams:
    beta: float = 1.0    # arousal gain (NV-IBF)
    gamma: float = 1.0   # valence gain (NV-IBF)
    factor_min: float = 0.25
    factor_max: float = 4.0
    faint_threshold: float = 9.5
    hallucination_arousal: float = 8.0
    hallucination_valence: float = 2.0
    sprint_gain: float = 0.5
    sprint_min: float = 0.5
    sprint_max: float = 1.5


@dataclass(frozen=True)
class DecisionContext:
    folders: int = 0
    chasing: bool = False


def _clamp_factor(x: float, params: ClearsParams) -> float:
    return min(params.factor_max, max(params.factor_min, x))


def decide_nvibf(es: EmotionalState, ctx: DecisionContext,
                 baseline: NeutralBaseline = NeutralBaseline(),
                 params: ClearsParams = ClearsParams()) -> list[Directive]:
    """Hidden adaptation: high arousal suppresses the creature and boosts
    environmental events; low valence boosts whichever objective room the
    player still needs, and the evasion tunnel while being chased."""
    a_dev = (es.arousal - baseline.arousal0) / 5.0
    v_dev = (baseline.valence0 - es.valence) / 5.0
    directives: list[Directive] = [
        ScaleCreatureProbability(_clamp_factor(1.0 - params.beta * a_dev, params)),
        ScaleEnvEventProbability(_clamp_factor(1.0 + params.beta * a_dev, params)),
        ScaleObjectiveRoomWeight(
            _clamp_factor(1.0 + params.gamma * v_dev, params),
            target="key_rooms" if ctx.folders < 2 else "exit_room",
        ),
    ]
    if ctx.chasing:
        directives.append(
            ScaleEvasionTunnelWeight(_clamp_factor(1.0 + params.gamma * v_dev, params))
        )
    return directives


def decide_vibf(es: EmotionalState,
                baseline: NeutralBaseline = NeutralBaseline(),
                params: ClearsParams = ClearsParams()) -> list[Directive]:
    """Visible adaptation: the character mirrors the player's state."""
    a_dev = (es.arousal - baseline.arousal0) / 5.0
    speed = min(params.sprint_max, max(params.sprint_min, 1.0 + params.sprint_gain * a_dev))
    duration = min(params.sprint_max, max(params.sprint_min, 1.0 - params.sprint_gain * a_dev))
    directives: list[Directive] = [
        SetSprintParams(speed, duration),
        SetHeartbeatIntensity(min(1.0, max(0.0, a_dev))),
    ]
    if es.arousal >= params.faint_threshold:
        directives.append(TriggerFaint())
    hallucinating = (
        es.arousal >= params.hallucination_arousal
        or es.valence <= params.hallucination_valence
    )
    directives.append(SetHallucinations(hallucinating))
    directives.append(SetBreathing(scared=es.arousal > baseline.arousal0))
    if es.valence < baseline.valence0 and baseline.valence0 > 0:
        tunnel = min(1.0, max(0.0, (baseline.valence0 - es.valence) / baseline.valence0))
    else:
        tunnel = 0.0
    directives.append(SetTunnelVision(tunnel))
    return directives


def decide(condition: Condition, es: EmotionalState, ctx: DecisionContext,
           baseline: NeutralBaseline = NeutralBaseline(),
           params: ClearsParams = ClearsParams()) -> list[Directive]:
    if condition is Condition.NBF:
        return []
    if condition is Condition.VIBF:
        return decide_vibf(es, baseline, params)
    return decide_nvibf(es, ctx, baseline, params)
