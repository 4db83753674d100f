"""In-world mechanics: detail spawning, tripwire events, creature AI, avatar
movement/stamina, sanity and fear, win/lose evaluation.

All functions here are small state transitions; the session loop in
``simulator`` wires them to the world graph and the event log.
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from enum import Enum

from .core import AffectLoopError
from .worldgen import BlockType, WorldGraph


class GameLogicError(AffectLoopError):
    pass


# --- block details ------------------------------------------------------------

class DetailKind(Enum):
    PAPER_1 = "Paper1"
    PAPER_2 = "Paper2"
    PAPER_3 = "Paper3"
    PAPER_4 = "Paper4"
    PAPER_5 = "Paper5"
    PAPER_6 = "Paper6"
    PAPER_7 = "Paper7"
    CHALK_1 = "Chalk1"
    CHALK_2 = "Chalk2"
    CHALK_3 = "Chalk3"
    CHALK_4 = "Chalk4"
    CHALK_5 = "Chalk5"
    ENV_WALL_LIGHT = "EnvWallLight"
    ENV_WATER_DRIPPING = "EnvWaterDripping"
    ENV_VERTICAL_PIPE = "EnvVerticalPipe"
    ENV_STEAM = "EnvSteam"
    ENV_WATER_SPLASH = "EnvWaterSplash"


DEFAULT_DETAIL_DELAY = 5  # blocks


class DetailDelayState:
    """Remaining-delay counters per detail kind, counted in spawned blocks."""

    def __init__(self, delay: int = DEFAULT_DETAIL_DELAY):
        self.delay = delay
        self.remaining: dict[DetailKind, int] = {k: 0 for k in DetailKind}

    def on_block_spawn(self) -> None:
        for k, r in self.remaining.items():
            if r > 0:
                self.remaining[k] = r - 1


def select_detail(rng: random.Random, delay_state: DetailDelayState) -> DetailKind | None:
    """Uniform pick among kinds whose delay has elapsed; None leaves the slot
    empty when every kind is still delayed."""
    eligible = [k for k in DetailKind if delay_state.remaining[k] == 0]
    if not eligible:
        return None
    choice = eligible[rng.randrange(len(eligible))]
    delay_state.remaining[choice] = delay_state.delay
    return choice


# --- environmental events -----------------------------------------------------

class EventKind(Enum):
    EXPLOSION = "Explosion"
    BUGS = "Bugs"
    LIGHT_BLAST = "LightBlast"
    PIPE_STEAM_BURST = "PipeSteamBurst"
    PIPE_WATER_BURST = "PipeWaterBurst"
    PIPE_FALL = "PipeFall"


#: delay in spawned blocks after a firing; the explosion is one-shot instead
EVENT_DELAYS: dict[EventKind, int] = {
    EventKind.EXPLOSION: 0,
    EventKind.BUGS: 20,
    EventKind.LIGHT_BLAST: 15,
    EventKind.PIPE_STEAM_BURST: 15,
    EventKind.PIPE_WATER_BURST: 15,
    EventKind.PIPE_FALL: 10,
}

DEFAULT_EVENT_PROBABILITY = 0.35


@dataclass
class EventTrigger:
    kind: EventKind
    probability: float = DEFAULT_EVENT_PROBABILITY
    remaining_delay: int = 0
    fired_once: bool = False

    @property
    def delay_blocks(self) -> int:
        return EVENT_DELAYS[self.kind]

    def on_block_spawn(self) -> None:
        if self.remaining_delay > 0:
            self.remaining_delay -= 1


@dataclass(frozen=True)
class EventOccurrence:
    kind: EventKind


def try_trigger(trigger: EventTrigger, rng: random.Random,
                scale: float = 1.0) -> EventOccurrence | None:
    """Tripwire check when the player steps on the trigger volume.

    Fires iff the delay elapsed, the one-shot budget is not spent, and the next
    rng draw falls inside probability * scale (capped at 1).
    """
    if trigger.remaining_delay > 0:
        return None
    if trigger.kind is EventKind.EXPLOSION and trigger.fired_once:
        return None
    p = min(1.0, max(0.0, trigger.probability * scale))
    if p <= 0.0 or rng.random() >= p:
        return None
    trigger.remaining_delay = trigger.delay_blocks
    if trigger.kind is EventKind.EXPLOSION:
        trigger.fired_once = True
    return EventOccurrence(trigger.kind)


# --- creature AI ----------------------------------------------------------------

class Hostility(Enum):
    PASSIVE = 0
    PASSIVE_AGGRESSIVE = 1
    AGGRESSIVE = 2


class Fsm(Enum):
    PASSIVE = "Passive"
    SEARCHING = "Searching"
    CHASING = "Chasing"
    RETREAT = "Retreat"


class CreatureOutcome(Enum):
    DESPAWN = "Despawn"
    KILL = "Kill"
    RETREAT_INCREMENT = "RetreatIncrement"


MAX_RETREATS = 3


@dataclass
class CreatureState:
    hostility: Hostility = Hostility.PASSIVE
    fsm: Fsm = Fsm.PASSIVE
    retreat_count: int = 0
    spawned: bool = False
    block_id: int | None = None
    anchor_index: int = 0
    position: tuple[float, float] = (0.0, 0.0)
    retreat_target: tuple[float, float] | None = None


@dataclass(frozen=True)
class GameContext:
    folders: int
    total_spawned: int
    retreat_count: int


def update_hostility(creature: CreatureState, ctx: GameContext) -> Hostility:
    """Escalate hostility; it never downgrades.

    Passive-Aggressive once the first folder is taken; Aggressive once 30
    blocks have spawned, both folders are taken, or the creature retreated 3
    times.
    """
    level = Hostility.PASSIVE
    if ctx.folders >= 1:
        level = Hostility.PASSIVE_AGGRESSIVE
    if ctx.total_spawned >= 30 or ctx.folders >= 2 or ctx.retreat_count >= MAX_RETREATS:
        level = Hostility.AGGRESSIVE
    if level.value > creature.hostility.value:
        creature.hostility = level
        if creature.hostility is Hostility.AGGRESSIVE and creature.fsm is Fsm.PASSIVE:
            creature.fsm = Fsm.SEARCHING
    return creature.hostility


@dataclass(frozen=True)
class FsmContext:
    """Geometry snapshot the state machine needs for one step."""

    distance_to_avatar: float
    escape_hops: int          # link-graph hops between creature and avatar blocks
    in_evasion_crouched: bool  # avatar crouched inside an evasion tunnel
    at_retreat_target: bool
    proximity: float = 2.0
    attack_range: float = 0.5
    escape_blocks: int = 2


def step_fsm(creature: CreatureState, ctx: FsmContext,
             rng: random.Random) -> tuple[Fsm, CreatureOutcome | None]:
    """One state-machine step; movement itself is applied by the caller.

    Returns the new state and an outcome: Kill ends the session, Despawn and
    RetreatIncrement both remove the creature (the latter also counts toward
    the 3-retreat escalation).
    """
    if not creature.spawned:
        raise GameLogicError("step_fsm on a despawned creature")
    if creature.fsm is Fsm.SEARCHING and creature.hostility is not Hostility.AGGRESSIVE:
        raise GameLogicError("Searching state outside Aggressive hostility")

    if creature.fsm is Fsm.PASSIVE:
        if ctx.distance_to_avatar <= ctx.proximity:
            if creature.hostility is Hostility.PASSIVE_AGGRESSIVE:
                if rng.random() < 0.5:
                    creature.fsm = Fsm.CHASING
                    return creature.fsm, None
                return creature.fsm, CreatureOutcome.RETREAT_INCREMENT
            if creature.hostility is Hostility.PASSIVE:
                return creature.fsm, CreatureOutcome.RETREAT_INCREMENT
        return creature.fsm, None

    if creature.fsm is Fsm.SEARCHING:
        if ctx.distance_to_avatar <= ctx.proximity:
            creature.fsm = Fsm.CHASING
        return creature.fsm, None

    if creature.fsm is Fsm.CHASING:
        if ctx.escape_hops < 0 or ctx.escape_hops > ctx.escape_blocks:
            return creature.fsm, CreatureOutcome.DESPAWN
        if ctx.in_evasion_crouched:
            creature.fsm = Fsm.RETREAT
            return creature.fsm, None
        if ctx.distance_to_avatar <= ctx.attack_range:
            return creature.fsm, CreatureOutcome.KILL
        return creature.fsm, None  # caller advances toward the player

    # Retreat: walk to the next block center, then ambush (or give up when the
    # hostility has not escalated yet, which also counts as a retreat).
    if ctx.at_retreat_target:
        if creature.hostility is Hostility.AGGRESSIVE:
            creature.fsm = Fsm.SEARCHING
            return creature.fsm, None
        return creature.fsm, CreatureOutcome.RETREAT_INCREMENT
    return creature.fsm, None


def spawn_probability(total_spawned: int, p0: float = 0.05, k: float = 0.005,
                      pmax: float = 0.5) -> float:
    """Base creature spawn probability; affine in blocks spawned, clamped."""
    return min(pmax, max(0.0, p0 + k * total_spawned))


def maybe_spawn_creature(block, world: WorldGraph, rng: random.Random,
                         avatar_position: tuple[float, float], scale: float = 1.0,
                         p0: float = 0.05, k: float = 0.005,
                         pmax: float = 0.5) -> tuple[int, int] | None:
    """Roll the spawn schedule for a freshly spawned block.

    On success returns (block_id, anchor_index) for the anchor farthest from
    the player (the most plausible ambush point).
    """
    p = spawn_probability(world.total_spawned, p0, k, pmax) * scale
    if p <= 0.0 or rng.random() >= p:
        return None
    best_index = 0
    best_dist = -1.0
    for i, anchor in enumerate(block.anchors):
        from .worldgen import DIR_DELTA
        dx, dy = DIR_DELTA[anchor.direction]
        ax = block.cell[0] + 0.5 * dx
        ay = block.cell[1] + 0.5 * dy
        d = math.hypot(ax - avatar_position[0], ay - avatar_position[1])
        if d > best_dist:
            best_dist = d
            best_index = i
    return block.id, best_index


# --- avatar ---------------------------------------------------------------------

class MovementMode(Enum):
    WALK = "Walk"
    SPRINT = "Sprint"
    CROUCH = "Crouch"


class Action(Enum):
    WALK = "Walk"
    SPRINT = "Sprint"
    CROUCH = "Crouch"
    INTERACT = "Interact"


@dataclass
class MovementModifiers:
    """V-IBF hooks: multipliers applied on top of the configured sprint params."""

    sprint_speed_mult: float = 1.0
    sprint_duration_mult: float = 1.0


@dataclass
class AvatarState:
    position: tuple[float, float] = (0.0, 0.0)
    movement_mode: MovementMode = MovementMode.WALK
    stamina: float = 1.0
    sanity: int = 1
    folders: int = 0
    fear_intensity: float = 0.0
    fainted: bool = False

    # level-driven affliction flags
    @property
    def heavy_breathing(self) -> bool:
        return self.sanity >= 2

    @property
    def auditory_hallucinations(self) -> bool:
        return self.sanity >= 3

    @property
    def dizziness(self) -> bool:
        return self.sanity >= 4


@dataclass(frozen=True)
class AvatarConfig:
    base_speed: float = 3.0        # cells / second
    sprint_mult: float = 1.6
    crouch_mult: float = 0.5
    stamina_duration: float = 6.0  # seconds of sprint at full stamina
    stamina_regen_duration: float = 12.0  # seconds to refill from empty


def avatar_speed(avatar: AvatarState, config: AvatarConfig,
                 modifiers: MovementModifiers | None = None) -> float:
    modifiers = modifiers or MovementModifiers()
    if avatar.movement_mode is MovementMode.SPRINT and avatar.stamina > 0.0:
        return config.base_speed * config.sprint_mult * modifiers.sprint_speed_mult
    if avatar.movement_mode is MovementMode.CROUCH:
        return config.base_speed * config.crouch_mult
    return config.base_speed


def update_avatar(avatar: AvatarState, action: Action, dt: float,
                  config: AvatarConfig,
                  modifiers: MovementModifiers | None = None) -> float:
    """Apply one action for ``dt`` seconds; returns the effective speed.

    Actions are ignored while fainted.  Sprint drains stamina over the
    (modifier-scaled) stamina duration; other modes regenerate it.
    """
    if avatar.fainted:
        return 0.0
    modifiers = modifiers or MovementModifiers()
    if action is Action.SPRINT:
        avatar.movement_mode = MovementMode.SPRINT
    elif action is Action.CROUCH:
        avatar.movement_mode = MovementMode.CROUCH
    elif action is Action.WALK:
        avatar.movement_mode = MovementMode.WALK
    speed = avatar_speed(avatar, config, modifiers)
    if avatar.movement_mode is MovementMode.SPRINT and avatar.stamina > 0.0:
        duration = config.stamina_duration * modifiers.sprint_duration_mult
        avatar.stamina = max(0.0, avatar.stamina - dt / duration)
    else:
        avatar.stamina = min(1.0, avatar.stamina + dt / config.stamina_regen_duration)
    return speed


# --- sanity and fear --------------------------------------------------------------

MAX_SANITY = 4


def update_sanity(avatar: AvatarState, event_kind: str) -> int:
    """Any environmental event or creature appearance deepens the psychosis by
    one level, saturating at 4.  Sanity never recovers within a session."""
    if avatar.sanity < MAX_SANITY:
        avatar.sanity += 1
    return avatar.sanity


FEAR_ENVIRONMENTAL = 0.3
FEAR_CREATURE = 0.7
FEAR_CHASE_LOOK = 1.0


@dataclass(frozen=True)
class FearEffect:
    intensity: float
    shake: bool = False


def fear_intensity(event_kind: str, chasing_and_looking: bool = False) -> FearEffect:
    """Tunnel-vision intensity: environmental events are mild, creature events
    severe, and being chased while looking at the creature maxes out with a
    camera shake."""
    if chasing_and_looking:
        return FearEffect(FEAR_CHASE_LOOK, shake=True)
    if event_kind in ("CreatureSpawn", "CreatureChaseStart"):
        return FearEffect(FEAR_CREATURE)
    return FearEffect(FEAR_ENVIRONMENTAL)


# --- outcome ------------------------------------------------------------------------

class Outcome(Enum):
    ONGOING = "Ongoing"
    WIN = "Win"
    LOSE = "Lose"


def check_outcome(avatar: AvatarState, world: WorldGraph, avatar_block_id: int | None,
                  killed: bool) -> Outcome:
    if killed:
        return Outcome.LOSE
    if avatar.folders >= 2 and avatar_block_id is not None:
        block = world.blocks.get(avatar_block_id)
        if block is not None and block.block_type is BlockType.EXIT_ROOM:
            return Outcome.WIN
    return Outcome.ONGOING
