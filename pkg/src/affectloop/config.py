"""Session configuration: every decided default, a flat ``key = value`` text
format with dotted keys, and override plumbing.

Example config file::

    clears.beta = 1.0
    worldgen.weight.straight = 40
    sim.duration = 120
    player.policy = explorer
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

from .clears import ClearsParams, Condition, NeutralBaseline
from .core import AffectLoopError
from .gameplay import AvatarConfig
from .piers import Channel
from .worldgen import DEFAULT_SPHERE_RADIUS, DEFAULT_WEIGHTS, BlockType


class ConfigError(AffectLoopError):
    pass


@dataclass(frozen=True)
class PiersConfig:
    smoothing_window: int = 5
    window_seconds: float = 1.0


@dataclass(frozen=True)
class WorldgenConfig:
    weights: dict[BlockType, float] = field(default_factory=lambda: dict(DEFAULT_WEIGHTS))
    sphere_radius: float = DEFAULT_SPHERE_RADIUS


@dataclass(frozen=True)
class GameplayConfig:
    avatar: AvatarConfig = AvatarConfig()
    proximity: float = 2.0
    attack_range: float = 0.5
    escape_blocks: int = 2
    event_probability: float = 0.35
    creature_p0: float = 0.05
    creature_k: float = 0.005
    creature_pmax: float = 0.5
    creature_speed: float = 3.5
    detail_delay: int = 5


@dataclass(frozen=True)
class GladosConfig:
    blackout_seconds: float = 2.5
    post_faint_spawn_prob: float = 0.5


@dataclass(frozen=True)
class ImpulseKernel:
    """Response of the synthetic player's AV state to one event kind."""

    arousal_delta: float
    valence_delta: float
    latency: float = 1.5
    tau: float = 6.0


def default_kernels() -> dict[str, ImpulseKernel]:
    creature = ImpulseKernel(3.0, -1.5, latency=1.5, tau=8.0)
    return {
        "CreatureSpawn": creature,
        "CreatureChaseStart": creature,
        "EnvEvent": ImpulseKernel(1.5, -0.5, latency=1.5, tau=6.0),
        "FolderPickup": ImpulseKernel(0.5, 1.5, latency=1.5, tau=6.0),
    }


@dataclass(frozen=True)
class ChannelLine:
    """Ground-truth channel response: feature = base + gain * target."""

    base: float
    gain: float


def default_channel_lines() -> dict[Channel, ChannelLine]:
    return {
        Channel.SC: ChannelLine(base=0.2, gain=0.5),       # microsiemens vs arousal
        Channel.HR: ChannelLine(base=40.0, gain=10.0),     # bpm vs arousal
        Channel.EMG_ZYG: ChannelLine(base=0.0, gain=0.1),  # cheek vs valence
        Channel.EMG_CORR: ChannelLine(base=1.0, gain=-0.1),  # brow vs valence
    }


class Policy:
    EXPLORER = "explorer"
    OBJECTIVE_SEEKER = "objective_seeker"
    FLEER = "fleer"
    ALL = (EXPLORER, OBJECTIVE_SEEKER, FLEER)


@dataclass(frozen=True)
class PlayerConfig:
    policy: str = Policy.EXPLORER
    noise_sigma: float = 0.0
    neutral_arousal: float = 5.0
    neutral_valence: float = 5.0
    kernels: dict[str, ImpulseKernel] = field(default_factory=default_kernels)
    channel_lines: dict[Channel, ChannelLine] = field(default_factory=default_channel_lines)


@dataclass(frozen=True)
class ScenarioConfig:
    seed: int = 0
    condition: Condition = Condition.NBF
    duration: float = 120.0
    tick_period: float = 0.1
    piers: PiersConfig = PiersConfig()
    worldgen: WorldgenConfig = field(default_factory=WorldgenConfig)
    gameplay: GameplayConfig = GameplayConfig()
    clears_params: ClearsParams = ClearsParams()
    baseline: NeutralBaseline = NeutralBaseline()
    glados: GladosConfig = GladosConfig()
    player: PlayerConfig = field(default_factory=PlayerConfig)
    calibration_text: str | None = None

    def __post_init__(self) -> None:
        if self.duration <= 0:
            raise ConfigError(f"duration must be positive, got {self.duration}")
        if self.tick_period <= 0:
            raise ConfigError(f"tick period must be positive, got {self.tick_period}")


def parse_config_text(text: str) -> dict[str, str]:
    """Parse flat ``key = value`` lines; '#' starts a comment."""
    flat: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        key = key.strip()
        value = value.strip()
        if not key or not value:
            raise ConfigError(f"line {lineno}: empty key or value in {raw!r}")
        flat[key] = value
    return flat


def _as_float(key: str, value: str) -> float:
    try:
        return float(value)
    except ValueError as exc:
        raise ConfigError(f"{key}: expected a number, got {value!r}") from exc


def _as_int(key: str, value: str) -> int:
    try:
        return int(value)
    except ValueError as exc:
        raise ConfigError(f"{key}: expected an integer, got {value!r}") from exc


_BLOCK_TYPE_KEYS = {
    "straight": BlockType.STRAIGHT,
    "corner": BlockType.CORNER,
    "three_way": BlockType.THREE_WAY,
    "four_way": BlockType.FOUR_WAY,
    "dead_end": BlockType.DEAD_END,
    "key_room_1": BlockType.KEY_ROOM_1,
    "key_room_2": BlockType.KEY_ROOM_2,
    "exit_room": BlockType.EXIT_ROOM,
    "evasion_tunnel": BlockType.EVASION_TUNNEL,
}

_CHANNEL_KEYS = {c.value: c for c in Channel}


def build_config(flat: dict[str, str], base: ScenarioConfig | None = None) -> ScenarioConfig:
    """Apply flat dotted-key overrides on top of ``base`` (or the defaults)."""
    cfg = base if base is not None else ScenarioConfig()
    weights = dict(cfg.worldgen.weights)
    kernels = dict(cfg.player.kernels)
    lines = dict(cfg.player.channel_lines)

    scalar: dict[str, object] = {}
    for key, value in flat.items():
        parts = key.split(".")
        if parts[0] == "worldgen" and len(parts) == 3 and parts[1] == "weight":
            bt = _BLOCK_TYPE_KEYS.get(parts[2])
            if bt is None:
                raise ConfigError(f"unknown block type in key {key!r}")
            weights[bt] = _as_float(key, value)
        elif parts[0] == "player" and len(parts) == 4 and parts[1] == "kernel":
            kernels[_kernel_event(key, parts[2])] = _set_kernel_field(
                kernels, key, parts[2], parts[3], _as_float(key, value))
        elif parts[0] == "player" and len(parts) == 4 and parts[1] == "channel":
            ch = _CHANNEL_KEYS.get(parts[2])
            if ch is None:
                raise ConfigError(f"unknown channel in key {key!r}")
            line = lines[ch]
            if parts[3] == "base":
                lines[ch] = replace(line, base=_as_float(key, value))
            elif parts[3] == "gain":
                lines[ch] = replace(line, gain=_as_float(key, value))
            else:
                raise ConfigError(f"unknown channel field in key {key!r}")
        else:
            scalar[key] = value

    def take_float(key: str, default: float) -> float:
        return _as_float(key, scalar.pop(key)) if key in scalar else default

    def take_int(key: str, default: int) -> int:
        return _as_int(key, scalar.pop(key)) if key in scalar else default

    def take_str(key: str, default: str) -> str:
        return str(scalar.pop(key)) if key in scalar else default

    condition = cfg.condition
    if "condition" in scalar:
        name = scalar.pop("condition").lower()
        try:
            condition = Condition(name)
        except ValueError as exc:
            raise ConfigError(f"unknown condition {name!r}") from exc

    policy = take_str("player.policy", cfg.player.policy).lower()
    if policy not in Policy.ALL:
        raise ConfigError(f"unknown player policy {policy!r}")

    avatar = AvatarConfig(
        base_speed=take_float("gameplay.base_speed", cfg.gameplay.avatar.base_speed),
        sprint_mult=take_float("gameplay.sprint_mult", cfg.gameplay.avatar.sprint_mult),
        crouch_mult=take_float("gameplay.crouch_mult", cfg.gameplay.avatar.crouch_mult),
        stamina_duration=take_float(
            "gameplay.stamina_duration", cfg.gameplay.avatar.stamina_duration),
        stamina_regen_duration=take_float(
            "gameplay.stamina_regen_duration", cfg.gameplay.avatar.stamina_regen_duration),
    )
    new = ScenarioConfig(
        seed=take_int("seed", cfg.seed),
        condition=condition,
        duration=take_float("sim.duration", cfg.duration),
        tick_period=take_float("sim.tick_period", cfg.tick_period),
        piers=PiersConfig(
            smoothing_window=take_int("piers.smoothing_window", cfg.piers.smoothing_window),
            window_seconds=take_float("piers.window_seconds", cfg.piers.window_seconds),
        ),
        worldgen=WorldgenConfig(
            weights=weights,
            sphere_radius=take_float("worldgen.sphere_radius", cfg.worldgen.sphere_radius),
        ),
        gameplay=GameplayConfig(
            avatar=avatar,
            proximity=take_float("gameplay.proximity", cfg.gameplay.proximity),
            attack_range=take_float("gameplay.attack_range", cfg.gameplay.attack_range),
            escape_blocks=take_int("gameplay.escape_blocks", cfg.gameplay.escape_blocks),
            event_probability=take_float(
                "gameplay.event_probability", cfg.gameplay.event_probability),
            creature_p0=take_float("gameplay.creature_p0", cfg.gameplay.creature_p0),
            creature_k=take_float("gameplay.creature_k", cfg.gameplay.creature_k),
            creature_pmax=take_float("gameplay.creature_pmax", cfg.gameplay.creature_pmax),
            creature_speed=take_float("gameplay.creature_speed", cfg.gameplay.creature_speed),
            detail_delay=take_int("gameplay.detail_delay", cfg.gameplay.detail_delay),
        ),
        clears_params=ClearsParams(
            beta=take_float("clears.beta", cfg.clears_params.beta),
            gamma=take_float("clears.gamma", cfg.clears_params.gamma),
            factor_min=take_float("clears.factor_min", cfg.clears_params.factor_min),
            factor_max=take_float("clears.factor_max", cfg.clears_params.factor_max),
            faint_threshold=take_float(
                "clears.faint_threshold", cfg.clears_params.faint_threshold),
            hallucination_arousal=take_float(
                "clears.hallucination_arousal", cfg.clears_params.hallucination_arousal),
            hallucination_valence=take_float(
                "clears.hallucination_valence", cfg.clears_params.hallucination_valence),
            sprint_gain=take_float("clears.sprint_gain", cfg.clears_params.sprint_gain),
            sprint_min=take_float("clears.sprint_min", cfg.clears_params.sprint_min),
            sprint_max=take_float("clears.sprint_max", cfg.clears_params.sprint_max),
        ),
        baseline=NeutralBaseline(
            arousal0=take_float("clears.baseline_arousal", cfg.baseline.arousal0),
            valence0=take_float("clears.baseline_valence", cfg.baseline.valence0),
        ),
        glados=GladosConfig(
            blackout_seconds=take_float("glados.blackout_seconds", cfg.glados.blackout_seconds),
            post_faint_spawn_prob=take_float(
                "glados.post_faint_spawn_prob", cfg.glados.post_faint_spawn_prob),
        ),
        player=PlayerConfig(
            policy=policy,
            noise_sigma=take_float("player.noise_sigma", cfg.player.noise_sigma),
            neutral_arousal=take_float("player.neutral_arousal", cfg.player.neutral_arousal),
            neutral_valence=take_float("player.neutral_valence", cfg.player.neutral_valence),
            kernels=kernels,
            channel_lines=lines,
        ),
        calibration_text=cfg.calibration_text,
    )
    if scalar:
        raise ConfigError(f"unknown config keys: {sorted(scalar)}")
    return new


def _kernel_event(key: str, name: str) -> str:
    mapping = {
        "creature_spawn": "CreatureSpawn",
        "creature_chase": "CreatureChaseStart",
        "env_event": "EnvEvent",
        "folder_pickup": "FolderPickup",
    }
    if name not in mapping:
        raise ConfigError(f"unknown kernel event in key {key!r}")
    return mapping[name]


def _set_kernel_field(kernels: dict[str, ImpulseKernel], key: str, name: str,
                      fieldname: str, value: float) -> ImpulseKernel:
    event = _kernel_event(key, name)
    kernel = kernels.get(event, ImpulseKernel(0.0, 0.0))
    if fieldname not in ("arousal_delta", "valence_delta", "latency", "tau"):
        raise ConfigError(f"unknown kernel field in key {key!r}")
    return replace(kernel, **{fieldname: value})


def load_config(text: str, base: ScenarioConfig | None = None) -> ScenarioConfig:
    return build_config(parse_config_text(text), base=base)
