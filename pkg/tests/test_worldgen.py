import random
from collections import Counter

import pytest
from hypothesis import given, settings, strategies as st

from affectloop.worldgen import (
    BASE_ANCHORS,
    DEAD_END_INITIAL_DELAY,
    DEFAULT_WEIGHTS,
    DIR_DELTA,
    EAST,
    NORTH,
    SOUTH,
    WEST,
    Block,
    BlockType,
    DelayTable,
    GenerationError,
    WorldGraph,
    can_spawn,
    format_placement_log,
    init_world,
    opposite,
    parse_placement_log,
    rotate,
    select_block_type,
    step_sphere,
)
from worldgen_oracle import verify_placement_log


def random_walk(seed, min_spawns, weights=DEFAULT_WEIGHTS):
    """Drive the sphere through random linked neighbors until enough blocks
    have spawned; returns the world and its placement log."""
    rng = random.Random(f"{seed}:walk")
    world, delays, sphere = init_world()
    world.activate(sphere.current_block, delays, rng, weights, tick=0)
    tick = 0
    while world.total_spawned < min_spawns:
        tick += 1
        neighbors = world.blocks[sphere.current_block].linked_ids()
        nxt = neighbors[rng.randrange(len(neighbors))]
        step_sphere(world, delays, sphere, rng, weights, nxt, tick=tick)
    return world, world.log


class TestDirections:
    def test_opposite(self):
        assert opposite(NORTH) == SOUTH
        assert opposite(EAST) == WEST
        assert opposite(opposite(WEST)) == WEST

    def test_rotate(self):
        assert rotate(NORTH, 90) == EAST
        assert rotate(WEST, 90) == NORTH
        assert rotate(SOUTH, 180) == NORTH
        assert rotate(NORTH, 0) == NORTH

    def test_deltas_are_unit(self):
        assert sorted(DIR_DELTA.values()) == [(-1, 0), (0, -1), (0, 1), (1, 0)]


class TestBlock:
    def test_anchor_directions_rotate(self):
        b = Block(1, BlockType.CORNER, (0, 0), 90)
        assert sorted(a.direction for a in b.anchors) == sorted([EAST, SOUTH])

    def test_four_way_has_all_anchors(self):
        b = Block(1, BlockType.FOUR_WAY, (0, 0), 0)
        assert len(b.anchors) == 4

    def test_anchor_toward(self):
        b = Block(1, BlockType.STRAIGHT, (0, 0), 0)
        assert b.anchor_toward(NORTH) is not None
        assert b.anchor_toward(EAST) is None


class TestDelayTable:
    def test_exit_room_blocked_for_exactly_ten_spawns(self):
        delays = DelayTable()
        delays.on_spawn(BlockType.EXIT_ROOM)
        for _ in range(10):
            assert not delays.eligible(BlockType.EXIT_ROOM)
            delays.on_spawn(BlockType.STRAIGHT)
        assert delays.eligible(BlockType.EXIT_ROOM)

    def test_key_room_delay_is_six(self):
        delays = DelayTable()
        delays.on_spawn(BlockType.KEY_ROOM_1)
        for _ in range(6):
            assert not delays.eligible(BlockType.KEY_ROOM_1)
            delays.on_spawn(BlockType.CORNER)
        assert delays.eligible(BlockType.KEY_ROOM_1)

    def test_copy_is_independent(self):
        delays = DelayTable()
        delays.on_spawn(BlockType.KEY_ROOM_1)
        c = delays.copy()
        c.on_spawn(BlockType.STRAIGHT)
        assert delays.remaining[BlockType.KEY_ROOM_1] == 6
        assert c.remaining[BlockType.KEY_ROOM_1] == 5


class TestInitWorld:
    def test_initial_state(self):
        world, delays, sphere = init_world()
        assert world.total_spawned == 1
        block = world.blocks[sphere.current_block]
        assert block.block_type is BlockType.EXIT_ROOM
        assert block.cell == (0, 0)
        assert delays.remaining[BlockType.DEAD_END] == DEAD_END_INITIAL_DELAY
        assert delays.remaining[BlockType.EXIT_ROOM] == 10


class TestSpawnRules:
    def test_singletons_blocked_while_present(self):
        world, delays, _ = init_world()
        delays.remaining[BlockType.EXIT_ROOM] = 0
        assert not can_spawn(BlockType.EXIT_ROOM, world, delays)  # one already present
        assert not can_spawn(BlockType.KEY_ROOM_1, world, delays)  # exit present

    def test_key_rooms_mutually_exclusive(self):
        world = WorldGraph()
        world._place(BlockType.KEY_ROOM_1, (0, 0), 0, tick=0)
        delays = DelayTable()
        assert not can_spawn(BlockType.KEY_ROOM_2, world, delays)
        assert not can_spawn(BlockType.KEY_ROOM_1, world, delays)

    def test_tunnels_always_allowed(self):
        world, delays, _ = init_world()
        for t in (BlockType.STRAIGHT, BlockType.CORNER, BlockType.THREE_WAY,
                  BlockType.FOUR_WAY, BlockType.EVASION_TUNNEL):
            assert can_spawn(t, world, delays)


class TestSelection:
    def test_frequencies_track_weights(self):
        world = WorldGraph()
        world._place(BlockType.EXIT_ROOM, (50, 50), 0, tick=0)  # key/exit ineligible
        delays = DelayTable()
        rng = random.Random(7)
        n = 20000
        counts = Counter(select_block_type(rng, world, delays, DEFAULT_WEIGHTS)
                         for _ in range(n))
        eligible = {t: w for t, w in DEFAULT_WEIGHTS.items()
                    if can_spawn(t, world, delays)}
        total = sum(eligible.values())
        for t, w in eligible.items():
            expected = w / total
            assert counts[t] / n == pytest.approx(expected, abs=0.015)

    def test_zero_weights_never_selected(self):
        world, delays, _ = init_world()
        weights = dict(DEFAULT_WEIGHTS)
        weights[BlockType.STRAIGHT] = 0.0
        rng = random.Random(1)
        picks = {select_block_type(rng, world, delays, weights) for _ in range(500)}
        assert BlockType.STRAIGHT not in picks

    def test_no_candidates_raises(self):
        world, delays, _ = init_world()
        with pytest.raises(GenerationError):
            select_block_type(random.Random(0), world, delays,
                              {t: 0.0 for t in BlockType})


class TestGraphConsistency:
    @pytest.mark.parametrize("seed", range(5))
    def test_walk_invariants(self, seed):
        world, _log = random_walk(seed, 150)
        for block in world.blocks.values():
            assert world.occupancy[block.cell] == block.id
            for anchor in block.anchors:
                if anchor.link is None:
                    continue
                neighbor = world.blocks[anchor.link]
                dx, dy = DIR_DELTA[anchor.direction]
                assert neighbor.cell == (block.cell[0] + dx, block.cell[1] + dy)
                back = neighbor.anchor_toward(opposite(anchor.direction))
                assert back is not None and back.link == block.id

    def test_despawn_unlinks_neighbors(self):
        rng = random.Random(0)
        world, delays, sphere = init_world()
        spawned = world.activate(sphere.current_block, delays, rng,
                                 DEFAULT_WEIGHTS, tick=0)
        assert len(spawned) == 1  # exit room has one anchor
        neighbor = spawned[0]
        world.despawn(neighbor.id, tick=1)
        exit_room = world.blocks[sphere.current_block]
        assert all(a.link is None for a in exit_room.anchors)

    def test_sphere_requires_linked_target(self):
        rng = random.Random(0)
        world, delays, sphere = init_world()
        world.activate(sphere.current_block, delays, rng, DEFAULT_WEIGHTS)
        with pytest.raises(GenerationError):
            step_sphere(world, delays, sphere, rng, DEFAULT_WEIGHTS, 999)

    def test_hop_distance(self):
        world, delays, sphere = init_world()
        rng = random.Random(3)
        spawned = world.activate(sphere.current_block, delays, rng, DEFAULT_WEIGHTS)
        assert world.hop_distance(sphere.current_block, sphere.current_block) == 0
        assert world.hop_distance(sphere.current_block, spawned[0].id) == 1
        lone = world._place(BlockType.STRAIGHT, (40, 40), 0, tick=0)
        assert world.hop_distance(sphere.current_block, lone.id) == -1


class TestOracle:
    @pytest.mark.parametrize("seed", range(20))
    def test_random_walks_clean(self, seed):
        _world, log = random_walk(seed, 200)
        assert verify_placement_log(log) == []

    def test_oracle_catches_overlap(self):
        log = [
            (0, "spawn", 1, "ExitRoom", 0, 0, 0),
            (1, "spawn", 2, "Straight", 0, 0, 0),
        ]
        assert any("overlap" in v for v in verify_placement_log(log))

    def test_oracle_catches_early_exit_room(self):
        log = [(0, "spawn", 1, "ExitRoom", 0, 0, 0)]
        log += [(i, "spawn", i + 1, "Straight", i, 1, 0) for i in range(1, 5)]
        log += [(9, "despawn", 1, "ExitRoom", 0, 0, 0),
                (9, "spawn", 99, "ExitRoom", 0, 2, 0)]
        assert any("early" in v for v in verify_placement_log(log))

    def test_oracle_catches_second_dead_end(self):
        log = [(0, "spawn", 1, "ExitRoom", 0, 0, 0)]
        log += [(i, "spawn", i + 1, "Straight", i, 1, 0) for i in range(1, 6)]
        log += [(7, "spawn", 50, "DeadEnd", 0, 5, 0),
                (8, "spawn", 51, "DeadEnd", 1, 5, 0)]
        assert any("DeadEnd" in v for v in verify_placement_log(log))


class TestPlacementLogFormat:
    def test_round_trip(self):
        _world, log = random_walk(11, 60)
        assert parse_placement_log(format_placement_log(log)) == log

    def test_empty(self):
        assert format_placement_log([]) == ""
        assert parse_placement_log("") == []
