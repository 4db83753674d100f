"""Deterministic session loop.

Per tick: a synthetic player turns the event history into an intended
arousal/valence state and emits matching sensor channels (by inverting the
session's fitted channel models); the classifier recovers the state; the
decision layer emits directives; the execution layer applies and logs them;
then the world and gameplay advance.  Identical configs produce byte-identical
session records.

Randomness is split into one seeded stream per subsystem (worldgen, events,
creature, player, noise), all derived from the scenario seed; nothing reads
the wall clock.
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass, field

from . import clears, gameplay, glados, piers, worldgen
from .config import ImpulseKernel, Policy, ScenarioConfig
from .core import AvTrace, EmotionalState, PhysiologicalSample
from .gameplay import (
    Action,
    AvatarState,
    CreatureOutcome,
    CreatureState,
    DetailDelayState,
    EventTrigger,
    Fsm,
    FsmContext,
    GameContext,
    Hostility,
    MovementMode,
    MovementModifiers,
    Outcome,
)
from .glados import DirectiveSink, EventLog, EventRecord, format_timestamp
from .worldgen import BlockType, SpawningSphere, WorldGraph

RNG_STREAMS = ("worldgen", "events", "creature", "player", "noise")

#: self-reported AV per default calibration phase
DEFAULT_PHASE_REPORTS = {
    piers.CalibrationPhase.RELAXING_MUSIC: (2.0, 7.0),
    piers.CalibrationPhase.WALDO_SCARE: (8.0, 4.0),
    piers.CalibrationPhase.FUNNY_VIDEO: (5.0, 8.0),
    piers.CalibrationPhase.HORROR_VIDEO: (7.0, 2.0),
}


def subsystem_rng(seed: int, name: str) -> random.Random:
    # string seeding hashes with sha512, stable across platforms and runs
    return random.Random(f"{seed}:{name}")


def default_calibration(config: ScenarioConfig) -> list[piers.CalibrationRecord]:
    """Noise-free calibration records generated from the ground-truth channel
    lines; fitting them recovers the lines exactly (rss ~ 0)."""
    records = []
    lines = config.player.channel_lines
    for phase, (arousal, valence) in DEFAULT_PHASE_REPORTS.items():
        feats = {}
        for channel, line in lines.items():
            target = arousal if piers.CHANNEL_TARGETS[channel] is piers.Target.AROUSAL else valence
            feats[channel.feature_name] = line.base + line.gain * target
        records.append(
            piers.CalibrationRecord(
                phase=phase,
                features=PhysiologicalSample(0.0, **feats),
                self_report=EmotionalState(arousal, valence),
            )
        )
    return records


@dataclass(frozen=True)
class SyntheticPlayerModel:
    neutral: EmotionalState
    kernels: dict[str, ImpulseKernel]
    noise_sigma: float = 0.0
    policy: str = Policy.EXPLORER


def synth_av(model: SyntheticPlayerModel, events: list[tuple[float, str]], t: float,
             rng: random.Random | None = None) -> EmotionalState:
    """Neutral state plus the superposed decayed impulses of all past events,
    plus optional Gaussian noise, clamped onto the AV scale."""
    a = model.neutral.arousal
    v = model.neutral.valence
    for event_time, kind in events:
        kernel = model.kernels.get(kind)
        if kernel is None:
            continue
        dt = t - event_time - kernel.latency
        if dt < 0:
            continue
        decay = math.exp(-dt / kernel.tau)
        a += kernel.arousal_delta * decay
        v += kernel.valence_delta * decay
    if model.noise_sigma > 0 and rng is not None:
        a += rng.gauss(0.0, model.noise_sigma)
        v += rng.gauss(0.0, model.noise_sigma)
    return EmotionalState(a, v)


@dataclass
class SessionRecord:
    config: ScenarioConfig
    events: list[EventRecord]
    av_samples: list[tuple[float, EmotionalState]]
    intended_samples: list[tuple[float, EmotionalState]]
    physio_samples: list[PhysiologicalSample]
    directive_lines: list[str]
    placement_log: list[tuple]
    outcome: Outcome
    creature_spawns: int = 0

    def av_trace(self) -> AvTrace:
        return AvTrace(tuple(self.av_samples), self.config.tick_period)

    def intended_trace(self) -> AvTrace:
        return AvTrace(tuple(self.intended_samples), self.config.tick_period)

    def files(self) -> dict[str, str]:
        """Render the record as its on-disk file set."""
        av_lines = ["t,arousal,valence"]
        for t, s in self.av_samples:
            av_lines.append(f"{format_timestamp(t)},{s.arousal!r},{s.valence!r}")
        intended_lines = ["t,arousal,valence"]
        for t, s in self.intended_samples:
            intended_lines.append(f"{format_timestamp(t)},{s.arousal!r},{s.valence!r}")
        physio_lines = ["t,sc,hr,emg_zyg,emg_corr"]
        for s in self.physio_samples:
            physio_lines.append(
                f"{format_timestamp(s.timestamp)},{s.sc!r},{s.hr!r},"
                f"{s.emg_zyg!r},{s.emg_corr!r}"
            )
        return {
            "events.tsv": glados.export_log(self.events),
            "av.csv": "\n".join(av_lines) + "\n",
            "intended.csv": "\n".join(intended_lines) + "\n",
            "physio.csv": "\n".join(physio_lines) + "\n",
            "directives.tsv": "".join(line + "\n" for line in self.directive_lines),
            "placements.tsv": worldgen.format_placement_log(self.placement_log),
            "outcome.txt": self.outcome.value + "\n",
        }


def _dist(a: tuple[float, float], b: tuple[float, float]) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])


class Session:
    """One simulated play session; ``run`` drives it to Win/Lose or timeout."""

    def __init__(self, config: ScenarioConfig):
        self.config = config
        self.rngs = {name: subsystem_rng(config.seed, name) for name in RNG_STREAMS}

        if config.calibration_text:
            records = piers.parse_calibration(config.calibration_text)
        else:
            records = default_calibration(config)
        self.model = piers.fit_calibration(records, config.piers.smoothing_window)
        self.classifier = piers.PiersClassifier(self.model)
        self.player_model = SyntheticPlayerModel(
            neutral=EmotionalState(config.player.neutral_arousal,
                                   config.player.neutral_valence),
            kernels=config.player.kernels,
            noise_sigma=config.player.noise_sigma,
            policy=config.player.policy,
        )

        self.world, self.delays, self.sphere = worldgen.init_world()
        self.avatar = AvatarState(position=(0.0, 0.0))
        self.avatar_block = self.sphere.current_block
        self.creature = CreatureState()
        self.sink = DirectiveSink()
        self.log = EventLog()
        self.triggers = {k: EventTrigger(k, config.gameplay.event_probability)
                         for k in gameplay.EventKind}
        self.details = DetailDelayState(config.gameplay.detail_delay)
        self.block_triggers: dict[int, gameplay.EventKind] = {}

        self.reaction_events: list[tuple[float, str]] = []
        self.window: list[PhysiologicalSample] = []
        self.window_len = max(1, round(config.piers.window_seconds / config.tick_period))

        self.tick = 0
        self.time = 0.0
        self.killed = False
        self.outcome = Outcome.ONGOING
        self.folder_taken = {BlockType.KEY_ROOM_1: False, BlockType.KEY_ROOM_2: False}
        self.visited: set[int] = {self.avatar_block}
        self.target_block: int | None = None
        self._pending_action = Action.WALK
        self.faint_until: float | None = None
        self.creature_spawns = 0

        self.av_samples: list[tuple[float, EmotionalState]] = []
        self.intended_samples: list[tuple[float, EmotionalState]] = []
        self.physio_samples: list[PhysiologicalSample] = []
        self.directive_lines: list[str] = []

        # session start: activate the spawn room
        self.world.activate(
            self.avatar_block, self.delays, self.rngs["worldgen"],
            self._effective_weights(), tick=0, on_spawn=self._on_block_spawn,
        )

    # -- logging helpers ---------------------------------------------------

    def _log(self, kind: str, comment: str = "", **params) -> EventRecord:
        record = EventRecord.make(self.time, kind, comment=comment, **params)
        self.log.log_event(record)
        if kind in self.player_model.kernels:
            self.reaction_events.append((self.time, kind))
        return record

    def _log_directive(self, directive) -> None:
        name = type(directive).__name__
        fields = ";".join(
            f"{k}={v}" for k, v in sorted(vars(directive).items())
        )
        self.directive_lines.append(f"{format_timestamp(self.time)}\t{name}\t{fields}")

    # -- world callbacks ---------------------------------------------------

    def _effective_weights(self) -> dict[BlockType, float]:
        base = self.config.worldgen.weights
        weights = dict(base)
        weights[BlockType.KEY_ROOM_1] = base[BlockType.KEY_ROOM_1] * self.sink.key_room_factor
        weights[BlockType.KEY_ROOM_2] = base[BlockType.KEY_ROOM_2] * self.sink.key_room_factor
        weights[BlockType.EXIT_ROOM] = base[BlockType.EXIT_ROOM] * self.sink.exit_room_factor
        if self.creature.spawned and self.creature.fsm is Fsm.CHASING:
            weights[BlockType.EVASION_TUNNEL] = (
                base[BlockType.EVASION_TUNNEL] * self.sink.evasion_factor
            )
        return weights

    def _on_block_spawn(self, block) -> None:
        gp = self.config.gameplay
        self._log("BlockSpawn", block_id=block.id, type=block.block_type.value,
                  x=block.cell[0], y=block.cell[1], rotation=block.rotation)
        for trigger in self.triggers.values():
            trigger.on_block_spawn()
        self.details.on_block_spawn()
        events_rng = self.rngs["events"]
        kinds = list(gameplay.EventKind)
        self.block_triggers[block.id] = kinds[events_rng.randrange(len(kinds))]
        gameplay.select_detail(events_rng, self.details)
        if not self.creature.spawned:
            placement = gameplay.maybe_spawn_creature(
                block, self.world, self.rngs["creature"], self.avatar.position,
                scale=self.sink.creature_scale, p0=gp.creature_p0, k=gp.creature_k,
                pmax=gp.creature_pmax,
            )
            if placement is not None:
                self._spawn_creature(*placement)

    def _on_block_despawn(self, block) -> None:
        self.block_triggers.pop(block.id, None)
        if self.creature.spawned and self.creature.block_id == block.id:
            self._despawn_creature()

    # -- creature ------------------------------------------------------------

    def _spawn_creature(self, block_id: int, anchor_index: int) -> None:
        block = self.world.blocks[block_id]
        anchor = block.anchors[anchor_index % len(block.anchors)]
        dx, dy = worldgen.DIR_DELTA[anchor.direction]
        self.creature.spawned = True
        self.creature.block_id = block_id
        self.creature.anchor_index = anchor_index % len(block.anchors)
        self.creature.position = (block.cell[0] + 0.5 * dx, block.cell[1] + 0.5 * dy)
        self.creature.fsm = (
            Fsm.SEARCHING if self.creature.hostility is Hostility.AGGRESSIVE else Fsm.PASSIVE
        )
        self.creature.retreat_target = None
        self.creature_spawns += 1
        self._log("CreatureSpawn", block_id=block_id, anchor=self.creature.anchor_index)
        gameplay.update_sanity(self.avatar, "CreatureSpawn")
        self._log("SanityLevelUp", level=self.avatar.sanity)
        self.avatar.fear_intensity = gameplay.fear_intensity("CreatureSpawn").intensity

    def _despawn_creature(self) -> None:
        self.creature.spawned = False
        self.creature.block_id = None
        self.creature.retreat_target = None
        self.creature.fsm = (
            Fsm.SEARCHING if self.creature.hostility is Hostility.AGGRESSIVE else Fsm.PASSIVE
        )

    def _creature_block(self) -> int | None:
        cell = (round(self.creature.position[0]), round(self.creature.position[1]))
        return self.world.occupancy.get(cell, self.creature.block_id)

    def _step_creature(self, dt: float) -> None:
        gameplay.update_hostility(
            self.creature,
            GameContext(self.avatar.folders, self.world.total_spawned,
                        self.creature.retreat_count),
        )
        if not self.creature.spawned:
            return
        gp = self.config.gameplay
        creature_block = self._creature_block()
        if creature_block is not None:
            self.creature.block_id = creature_block
        hops = (self.world.hop_distance(creature_block, self.avatar_block)
                if creature_block is not None else -1)
        in_evasion = (
            self.world.blocks[self.avatar_block].block_type is BlockType.EVASION_TUNNEL
            and self.avatar.movement_mode is MovementMode.CROUCH
        )
        at_target = (
            self.creature.retreat_target is not None
            and _dist(self.creature.position, self.creature.retreat_target) < 0.05
        )
        ctx = FsmContext(
            distance_to_avatar=_dist(self.creature.position, self.avatar.position),
            escape_hops=hops,
            in_evasion_crouched=in_evasion,
            at_retreat_target=at_target,
            proximity=gp.proximity,
            attack_range=gp.attack_range,
            escape_blocks=gp.escape_blocks,
        )
        prev = self.creature.fsm
        fsm, outcome = gameplay.step_fsm(self.creature, ctx, self.rngs["creature"])
        if fsm is Fsm.CHASING and prev is not Fsm.CHASING:
            self._log("CreatureChaseStart")
            effect = gameplay.fear_intensity("CreatureChaseStart", chasing_and_looking=True)
            self.avatar.fear_intensity = effect.intensity
            # the player notices the chase and re-plans immediately
            self.target_block = None
        if fsm is Fsm.RETREAT and prev is not Fsm.RETREAT:
            self.creature.retreat_target = self._retreat_target()
        if outcome is CreatureOutcome.KILL:
            self.killed = True
            self._log("Lose", reason="caught")
            return
        if outcome is CreatureOutcome.RETREAT_INCREMENT:
            self.creature.retreat_count += 1
            self._log("CreatureRetreat", count=self.creature.retreat_count)
            self._despawn_creature()
            gameplay.update_hostility(
                self.creature,
                GameContext(self.avatar.folders, self.world.total_spawned,
                            self.creature.retreat_count),
            )
            return
        if outcome is CreatureOutcome.DESPAWN:
            self._despawn_creature()
            return
        # movement
        speed = gp.creature_speed * dt
        if fsm is Fsm.CHASING:
            self.creature.position = _advance(self.creature.position,
                                              self.avatar.position, speed)
        elif fsm is Fsm.RETREAT and self.creature.retreat_target is not None:
            self.creature.position = _advance(self.creature.position,
                                              self.creature.retreat_target, speed)

    def _retreat_target(self) -> tuple[float, float]:
        block_id = self._creature_block()
        if block_id is None:
            return self.creature.position
        block = self.world.blocks[block_id]
        best = block.cell
        best_d = -1.0
        for nid in block.linked_ids():
            cell = self.world.blocks[nid].cell
            d = _dist((float(cell[0]), float(cell[1])), self.avatar.position)
            if d > best_d:
                best_d = d
                best = cell
        return (float(best[0]), float(best[1]))

    # -- avatar ----------------------------------------------------------------

    def _choose_target(self) -> tuple[int | None, Action]:
        """Policy decision at a block center: where to go next and how."""
        rng = self.rngs["player"]
        block = self.world.blocks[self.avatar_block]
        neighbors = [nid for nid in block.linked_ids() if nid in self.world.blocks]
        chased = self.creature.spawned and self.creature.fsm is Fsm.CHASING
        policy = self.player_model.policy

        if policy == Policy.FLEER and chased:
            if block.block_type is BlockType.EVASION_TUNNEL:
                return None, Action.CROUCH
            if neighbors:
                far = max(neighbors, key=lambda nid: (
                    _dist(self._cell_center(nid), self.creature.position), nid))
                return far, Action.SPRINT
            return None, Action.WALK

        if policy == Policy.OBJECTIVE_SEEKER:
            wanted = []
            if not self.folder_taken[BlockType.KEY_ROOM_1]:
                wanted.append(BlockType.KEY_ROOM_1)
            if not self.folder_taken[BlockType.KEY_ROOM_2]:
                wanted.append(BlockType.KEY_ROOM_2)
            if self.avatar.folders >= 2:
                wanted.append(BlockType.EXIT_ROOM)
            for nid in neighbors:
                if self.world.blocks[nid].block_type in wanted:
                    return nid, Action.WALK

        if not neighbors:
            return None, Action.WALK
        unvisited = [nid for nid in neighbors if nid not in self.visited]
        pool = unvisited if unvisited else neighbors
        return pool[rng.randrange(len(pool))], Action.WALK

    def _cell_center(self, block_id: int) -> tuple[float, float]:
        cell = self.world.blocks[block_id].cell
        return (float(cell[0]), float(cell[1]))

    def _step_avatar(self, dt: float) -> None:
        if self.avatar.fainted:
            return
        if self.target_block is None or self.target_block not in self.world.blocks:
            self.target_block, action = self._choose_target()
            self._pending_action = action
        action = getattr(self, "_pending_action", Action.WALK)
        modifiers = MovementModifiers(self.sink.sprint_speed_mult,
                                      self.sink.sprint_duration_mult)
        speed = gameplay.update_avatar(self.avatar, action, dt,
                                       self.config.gameplay.avatar, modifiers)
        if self.target_block is None:
            return
        target = self._cell_center(self.target_block)
        step = speed * dt
        if _dist(self.avatar.position, target) <= step:
            self.avatar.position = target
            arrived = self.target_block
            self.target_block = None
            self._arrive(arrived)
        else:
            self.avatar.position = _advance(self.avatar.position, target, step)

    def _arrive(self, block_id: int) -> None:
        worldgen.step_sphere(
            self.world, self.delays, self.sphere, self.rngs["worldgen"],
            self._effective_weights(), block_id, tick=self.tick,
            on_spawn=self._on_block_spawn, on_despawn=self._on_block_despawn,
        )
        self.avatar_block = block_id
        self.visited.add(block_id)
        block = self.world.blocks[block_id]

        if block.block_type in self.folder_taken and not self.folder_taken[block.block_type]:
            self.folder_taken[block.block_type] = True
            self.avatar.folders += 1
            self._log("FolderPickup", folders=self.avatar.folders,
                      room=block.block_type.value)

        kind = self.block_triggers.get(block_id)
        if kind is not None:
            occurrence = gameplay.try_trigger(self.triggers[kind], self.rngs["events"],
                                              scale=self.sink.env_scale)
            if occurrence is not None:
                self._log("EnvEvent", sub=occurrence.kind.value)
                before = self.avatar.sanity
                gameplay.update_sanity(self.avatar, "EnvEvent")
                if self.avatar.sanity != before:
                    self._log("SanityLevelUp", level=self.avatar.sanity)
                self.avatar.fear_intensity = gameplay.fear_intensity("EnvEvent").intensity

        outcome = gameplay.check_outcome(self.avatar, self.world, self.avatar_block,
                                         self.killed)
        if outcome is Outcome.WIN:
            self.outcome = Outcome.WIN
            self._log("Win", folders=self.avatar.folders)

    # -- classification -----------------------------------------------------------

    def _emit_physio(self, intended: EmotionalState) -> PhysiologicalSample:
        feats = {}
        for channel in piers.Channel:
            model = self.model.model(channel)
            target = (intended.arousal
                      if piers.CHANNEL_TARGETS[channel] is piers.Target.AROUSAL
                      else intended.valence)
            if model.degenerate:
                feats[channel.feature_name] = model.intercept
            else:
                feats[channel.feature_name] = model.invert(target)
        feats["sc"] = max(0.0, feats["sc"])
        feats["hr"] = max(1e-6, feats["hr"])
        feats["emg_zyg"] = min(1.0, max(0.0, feats["emg_zyg"]))
        feats["emg_corr"] = min(1.0, max(0.0, feats["emg_corr"]))
        return PhysiologicalSample(self.time, **feats)

    # -- the loop -------------------------------------------------------------------

    def run(self) -> SessionRecord:
        cfg = self.config
        total_ticks = round(cfg.duration / cfg.tick_period)
        while self.tick < total_ticks and self.outcome is Outcome.ONGOING:
            self.time = self.tick * cfg.tick_period

            intended = synth_av(self.player_model, self.reaction_events, self.time,
                                self.rngs["noise"])
            sample = self._emit_physio(intended)
            self.window.append(sample)
            if len(self.window) > self.window_len:
                self.window.pop(0)
            recovered = self.classifier.classify(self.window)

            ctx = clears.DecisionContext(
                folders=self.avatar.folders,
                chasing=self.creature.spawned and self.creature.fsm is Fsm.CHASING,
            )
            directives = clears.decide(cfg.condition, recovered, ctx,
                                       cfg.baseline, cfg.clears_params)
            self.sink.apply(directives)
            for d in directives:
                self._log_directive(d)

            if self.sink.consume_faint() and not self.avatar.fainted:
                self.avatar.fainted = True
                self.faint_until = self.time + cfg.glados.blackout_seconds
                self._log("Faint", duration=cfg.glados.blackout_seconds)
            if self.avatar.fainted and self.faint_until is not None \
                    and self.time >= self.faint_until:
                self.avatar.fainted = False
                self.faint_until = None
                if (not self.creature.spawned
                        and self.rngs["creature"].random() < cfg.glados.post_faint_spawn_prob):
                    block = self.world.blocks[self.avatar_block]
                    self._spawn_creature(block.id, 0)

            self._step_avatar(cfg.tick_period)
            if self.outcome is Outcome.ONGOING:
                self._step_creature(cfg.tick_period)
                if self.killed:
                    self.outcome = Outcome.LOSE

            self.intended_samples.append((self.time, intended))
            self.av_samples.append((self.time, recovered))
            self.physio_samples.append(sample)
            self.tick += 1

        return SessionRecord(
            config=cfg,
            events=list(self.log.records),
            av_samples=self.av_samples,
            intended_samples=self.intended_samples,
            physio_samples=self.physio_samples,
            directive_lines=self.directive_lines,
            placement_log=list(self.world.log),
            outcome=self.outcome,
            creature_spawns=self.creature_spawns,
        )


def _advance(pos: tuple[float, float], target: tuple[float, float],
             step: float) -> tuple[float, float]:
    d = _dist(pos, target)
    if d <= step or d == 0.0:
        return target
    f = step / d
    return (pos[0] + (target[0] - pos[0]) * f, pos[1] + (target[1] - pos[1]) * f)


def run(config: ScenarioConfig) -> SessionRecord:
    """Run one full session for ``config``."""
    return Session(config).run()


def write_session(record: SessionRecord, out_dir) -> None:
    """Write the record's file set into ``out_dir`` (created if missing)."""
    import pathlib

    path = pathlib.Path(out_dir)
    path.mkdir(parents=True, exist_ok=True)
    for name, content in record.files().items():
        (path / name).write_text(content, encoding="utf-8", newline="\n")
