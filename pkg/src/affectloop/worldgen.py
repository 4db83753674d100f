"""Procedural block-graph level generation.

The level is a set of typed blocks on a discrete unit grid, connected through
anchors on their edges.  The world starts as a single Exit Room; an invisible
sphere around the player drives growth and pruning: entering a block's center
region spawns blocks on its unlinked anchors, leaving despawns the block's
linked neighbors except the one the player moved into.

Special block types carry a respawn delay measured in spawned blocks (Key
Rooms 6, Exit Room 10, Dead End blocked during the first 4 blocks) and rule
predicates (singleton Dead End / Exit Room; Key Rooms blocked while any Key
Room or Exit Room is present).
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from enum import Enum

from .core import AffectLoopError


class GenerationError(AffectLoopError):
    pass


class BlockType(Enum):
    STRAIGHT = "Straight"
    CORNER = "Corner"
    THREE_WAY = "ThreeWay"
    FOUR_WAY = "FourWay"
    DEAD_END = "DeadEnd"
    KEY_ROOM_1 = "KeyRoom1"
    KEY_ROOM_2 = "KeyRoom2"
    EXIT_ROOM = "ExitRoom"
    EVASION_TUNNEL = "EvasionTunnel"


#: edge directions as (dx, dy); rotation by 90 degrees maps N->E->S->W
NORTH, EAST, SOUTH, WEST = 0, 1, 2, 3
DIR_DELTA = {NORTH: (0, 1), EAST: (1, 0), SOUTH: (0, -1), WEST: (-1, 0)}
DIR_NAMES = {NORTH: "N", EAST: "E", SOUTH: "S", WEST: "W"}


def opposite(direction: int) -> int:
    return (direction + 2) % 4


def rotate(direction: int, rotation: int) -> int:
    """Rotate an edge direction by a rotation in degrees (multiple of 90)."""
    return (direction + rotation // 90) % 4


#: anchor edge directions per type at rotation 0
BASE_ANCHORS: dict[BlockType, tuple[int, ...]] = {
    BlockType.STRAIGHT: (NORTH, SOUTH),
    BlockType.EVASION_TUNNEL: (NORTH, SOUTH),
    BlockType.CORNER: (NORTH, EAST),
    BlockType.THREE_WAY: (NORTH, EAST, WEST),
    BlockType.FOUR_WAY: (NORTH, EAST, SOUTH, WEST),
    BlockType.KEY_ROOM_1: (NORTH, EAST, SOUTH, WEST),
    BlockType.KEY_ROOM_2: (NORTH, EAST, SOUTH, WEST),
    BlockType.EXIT_ROOM: (NORTH,),
    BlockType.DEAD_END: (NORTH,),
}

#: default spawn weights; normal tunnels dominate (config-overridable)
DEFAULT_WEIGHTS: dict[BlockType, float] = {
    BlockType.STRAIGHT: 40.0,
    BlockType.CORNER: 20.0,
    BlockType.THREE_WAY: 15.0,
    BlockType.FOUR_WAY: 10.0,
    BlockType.DEAD_END: 5.0,
    BlockType.EVASION_TUNNEL: 5.0,
    BlockType.KEY_ROOM_1: 2.5,
    BlockType.KEY_ROOM_2: 2.5,
    BlockType.EXIT_ROOM: 2.5,
}

#: respawn delay in blocks after a spawn of this type
RESPAWN_DELAY: dict[BlockType, int] = {
    BlockType.KEY_ROOM_1: 6,
    BlockType.KEY_ROOM_2: 6,
    BlockType.EXIT_ROOM: 10,
}

#: the Dead End is ineligible while the first blocks spawn
DEAD_END_INITIAL_DELAY = 4

#: types that may appear at most once at any instant
SINGLETON_TYPES = (
    BlockType.DEAD_END,
    BlockType.KEY_ROOM_1,
    BlockType.KEY_ROOM_2,
    BlockType.EXIT_ROOM,
)

DEFAULT_SPHERE_RADIUS = 1.5


class Anchor:
    """One connection point on a block edge (world direction after rotation)."""

    __slots__ = ("direction", "link")

    def __init__(self, direction: int, link: int | None = None):
        self.direction = direction
        self.link = link

    def __repr__(self) -> str:
        return f"Anchor({DIR_NAMES[self.direction]}, link={self.link})"


class Block:
    __slots__ = ("id", "block_type", "cell", "rotation", "anchors", "active")

    def __init__(self, id: int, block_type: BlockType, cell: tuple[int, int], rotation: int):
        self.id = id
        self.block_type = block_type
        self.cell = cell
        self.rotation = rotation
        self.anchors = [Anchor(rotate(d, rotation)) for d in BASE_ANCHORS[block_type]]
        self.active = False

    def anchor_toward(self, direction: int) -> Anchor | None:
        for a in self.anchors:
            if a.direction == direction:
                return a
        return None

    def linked_ids(self) -> list[int]:
        return [a.link for a in self.anchors if a.link is not None]

    def __repr__(self) -> str:
        return f"Block({self.id}, {self.block_type.value}, {self.cell}, rot={self.rotation})"


class DelayTable:
    """Per-type counters of blocks that must still spawn before eligibility."""

    __slots__ = ("remaining",)

    def __init__(self) -> None:
        self.remaining: dict[BlockType, int] = {t: 0 for t in BlockType}

    def eligible(self, block_type: BlockType) -> bool:
        return self.remaining[block_type] == 0

    def on_spawn(self, block_type: BlockType) -> None:
        """Count one spawned block, then arm the spawned type's own delay."""
        for t, r in self.remaining.items():
            if r > 0:
                self.remaining[t] = r - 1
        delay = RESPAWN_DELAY.get(block_type)
        if delay is not None:
            self.remaining[block_type] = delay

    def copy(self) -> "DelayTable":
        c = DelayTable()
        c.remaining = dict(self.remaining)
        return c


@dataclass
class SpawningSphere:
    """Player-centered volume whose block entry/exit drives spawn/despawn."""

    center: tuple[float, float]
    radius: float = DEFAULT_SPHERE_RADIUS
    current_block: int = 0


class WorldGraph:
    """The live block graph plus an append-only placement log.

    Log entries are tuples (tick, "spawn"|"despawn", block_id, type, x, y,
    rotation); see format_placement_log for the text form.
    """

    def __init__(self) -> None:
        self.blocks: dict[int, Block] = {}
        self.occupancy: dict[tuple[int, int], int] = {}
        self.total_spawned = 0
        self.log: list[tuple] = []
        self._next_id = 1

    # -- queries ---------------------------------------------------------

    def has_type(self, block_type: BlockType) -> bool:
        return any(b.block_type is block_type for b in self.blocks.values())

    def count_type(self, block_type: BlockType) -> int:
        return sum(1 for b in self.blocks.values() if b.block_type is block_type)

    def hop_distance(self, a: int, b: int) -> int:
        """Link-graph hop distance between two spawned blocks (BFS)."""
        if a == b:
            return 0
        seen = {a}
        frontier = [a]
        dist = 0
        while frontier:
            dist += 1
            nxt = []
            for bid in frontier:
                for lid in self.blocks[bid].linked_ids():
                    if lid == b:
                        return dist
                    if lid not in seen:
                        seen.add(lid)
                        nxt.append(lid)
            frontier = nxt
        return -1

    # -- mutation --------------------------------------------------------

    def _place(self, block_type: BlockType, cell: tuple[int, int], rotation: int,
               tick: int) -> Block:
        block = Block(self._next_id, block_type, cell, rotation)
        self._next_id += 1
        self.blocks[block.id] = block
        self.occupancy[cell] = block.id
        self.total_spawned += 1
        self.log.append((tick, "spawn", block.id, block_type.value, cell[0], cell[1], rotation))
        return block

    def despawn(self, block_id: int, tick: int) -> None:
        block = self.blocks.pop(block_id)
        del self.occupancy[block.cell]
        for anchor in block.anchors:
            if anchor.link is not None and anchor.link in self.blocks:
                neighbor = self.blocks[anchor.link]
                back = neighbor.anchor_toward(opposite(anchor.direction))
                if back is not None and back.link == block_id:
                    back.link = None
        self.log.append((tick, "despawn", block.id, block.block_type.value,
                         block.cell[0], block.cell[1], block.rotation))

    def activate(self, block_id: int, delays: DelayTable, rng: random.Random,
                 weights: dict[BlockType, float], tick: int = 0,
                 on_spawn=None) -> list[Block]:
        """Mark the block active and fill its unlinked anchors.

        For each unlinked anchor: if the neighbor cell is free, spawn a freshly
        selected block there rotated to link back; if it is occupied and the
        occupant has a free anchor facing us, link mutually; otherwise the
        anchor stays open.  Returns the newly spawned blocks.
        """
        block = self.blocks[block_id]
        block.active = True
        spawned = []
        for anchor in block.anchors:
            if anchor.link is not None:
                continue
            dx, dy = DIR_DELTA[anchor.direction]
            cell = (block.cell[0] + dx, block.cell[1] + dy)
            occupant_id = self.occupancy.get(cell)
            if occupant_id is not None:
                occupant = self.blocks[occupant_id]
                back = occupant.anchor_toward(opposite(anchor.direction))
                if back is not None and back.link is None:
                    anchor.link = occupant_id
                    back.link = block_id
                continue
            block_type = select_block_type(rng, self, delays, weights)
            rotation = _rotation_linking_back(block_type, opposite(anchor.direction))
            new_block = self._place(block_type, cell, rotation, tick)
            back = new_block.anchor_toward(opposite(anchor.direction))
            assert back is not None
            anchor.link = new_block.id
            back.link = block_id
            delays.on_spawn(block_type)
            spawned.append(new_block)
            if on_spawn is not None:
                on_spawn(new_block)
        return spawned

    def deactivate(self, block_id: int, keep_id: int, tick: int = 0,
                   on_despawn=None) -> list[int]:
        """Mark the block inactive and despawn its linked neighbors except
        ``keep_id`` (the block the sphere is inside).  Returns despawned ids."""
        block = self.blocks[block_id]
        block.active = False
        removed = []
        for neighbor_id in block.linked_ids():
            if neighbor_id == keep_id or neighbor_id not in self.blocks:
                continue
            if on_despawn is not None:
                on_despawn(self.blocks[neighbor_id])
            self.despawn(neighbor_id, tick)
            removed.append(neighbor_id)
        return removed


def _rotation_linking_back(block_type: BlockType, back_direction: int) -> int:
    """Smallest rotation giving the type an anchor facing ``back_direction``."""
    for rotation in (0, 90, 180, 270):
        if any(rotate(d, rotation) == back_direction for d in BASE_ANCHORS[block_type]):
            return rotation
    raise GenerationError(f"{block_type} has no anchors")  # unreachable: all types have >=1


def init_world() -> tuple[WorldGraph, DelayTable, SpawningSphere]:
    """Session start: one active Exit Room at the origin, player inside it."""
    world = WorldGraph()
    exit_room = world._place(BlockType.EXIT_ROOM, (0, 0), 0, tick=0)
    exit_room.active = True
    delays = DelayTable()
    delays.remaining[BlockType.DEAD_END] = DEAD_END_INITIAL_DELAY
    delays.remaining[BlockType.EXIT_ROOM] = RESPAWN_DELAY[BlockType.EXIT_ROOM]
    sphere = SpawningSphere(center=(0.0, 0.0), current_block=exit_room.id)
    return world, delays, sphere


def can_spawn(block_type: BlockType, world: WorldGraph, delays: DelayTable) -> bool:
    """Table-driven spawn predicate: respawn delays plus singleton rules."""
    if not delays.eligible(block_type):
        return False
    if block_type is BlockType.DEAD_END:
        return not world.has_type(BlockType.DEAD_END)
    if block_type in (BlockType.KEY_ROOM_1, BlockType.KEY_ROOM_2):
        return not (
            world.has_type(BlockType.KEY_ROOM_1)
            or world.has_type(BlockType.KEY_ROOM_2)
            or world.has_type(BlockType.EXIT_ROOM)
        )
    if block_type is BlockType.EXIT_ROOM:
        return not world.has_type(BlockType.EXIT_ROOM)
    return True


def select_block_type(rng: random.Random, world: WorldGraph, delays: DelayTable,
                      weights: dict[BlockType, float]) -> BlockType:
    """Sample among eligible types proportionally to their weights."""
    candidates = []
    total = 0.0
    for block_type in BlockType:  # fixed enum order keeps selection deterministic
        w = weights.get(block_type, 0.0)
        if w > 0.0 and can_spawn(block_type, world, delays):
            candidates.append((block_type, w))
            total += w
    if not candidates:
        raise GenerationError("no eligible block type with positive weight")
    pick = rng.random() * total
    acc = 0.0
    for block_type, w in candidates:
        acc += w
        if pick < acc:
            return block_type
    return candidates[-1][0]


def step_sphere(world: WorldGraph, delays: DelayTable, sphere: SpawningSphere,
                rng: random.Random, weights: dict[BlockType, float],
                new_block_id: int, tick: int = 0,
                on_spawn=None, on_despawn=None) -> list[Block]:
    """Move the sphere from its current block into a linked neighbor.

    Leaving the old block despawns its other neighbors; entering the new block
    spawns on its unlinked anchors.  Returns the newly spawned blocks.
    """
    old_id = sphere.current_block
    if new_block_id not in world.blocks:
        raise GenerationError(f"sphere target block {new_block_id} not spawned")
    if new_block_id != old_id and new_block_id not in world.blocks[old_id].linked_ids():
        raise GenerationError(
            f"sphere can only move along links ({old_id} -> {new_block_id})"
        )
    if new_block_id != old_id:
        world.deactivate(old_id, keep_id=new_block_id, tick=tick, on_despawn=on_despawn)
        sphere.current_block = new_block_id
        cell = world.blocks[new_block_id].cell
        sphere.center = (float(cell[0]), float(cell[1]))
    return world.activate(new_block_id, delays, rng, weights, tick=tick, on_spawn=on_spawn)


# --- placement log text format ------------------------------------------------
# one line per spawn/despawn: tick,spawn|despawn,block_id,type,x,y,rotation

def format_placement_log(log: list[tuple]) -> str:
    lines = [",".join(str(v) for v in entry) for entry in log]
    return "\n".join(lines) + ("\n" if lines else "")


def parse_placement_log(text: str) -> list[tuple]:
    entries = []
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        tick, op, block_id, type_name, x, y, rotation = line.split(",")
        entries.append((int(tick), op, int(block_id), type_name,
                        int(x), int(y), int(rotation)))
    return entries
