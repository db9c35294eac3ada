import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from swarm_aoi.world import (Device, Direction, WorldConfig, WorldConfigError, apply_move,
                             build_world, cluster_devices, place_devices)


def test_extent_11x11():
    world = build_world(WorldConfig(11, 11, 100.0))
    assert world.extent == (1100.0, 1100.0)
    assert world.bs_cell == (5, 5)
    np.testing.assert_allclose(world.bs_position, [550.0, 550.0])


def test_empty_restriction_all_valid():
    world = build_world(WorldConfig(4, 3))
    assert world.valid.all()
    assert len(world.valid_cells()) == 12


def test_only_bs_column_valid():
    nx, ny = 5, 5
    bs_col = nx // 2
    restricted = {(i, j) for i in range(nx) for j in range(ny) if i != bs_col}
    world = build_world(WorldConfig(nx, ny, restricted_cells=frozenset(restricted)))
    for i in range(nx):
        for j in range(ny):
            assert world.is_valid((i, j)) == (i == bs_col)


def test_rejects_bad_configs():
    with pytest.raises(WorldConfigError):
        build_world(WorldConfig(3, 3, restricted_cells=frozenset({(3, 0)})))
    with pytest.raises(WorldConfigError):
        build_world(WorldConfig(3, 3, restricted_cells=frozenset({(1, 1)})))
    with pytest.raises(WorldConfigError):
        build_world(WorldConfig(0, 3))
    with pytest.raises(WorldConfigError):
        build_world(WorldConfig(3, 3, cell_size=0.0))


def test_place_devices_deterministic_and_inside():
    world = build_world(WorldConfig())
    a = place_devices(world, 300, seed=7)
    b = place_devices(world, 300, seed=7)
    assert a == b
    assert len(a) == 300
    pos = np.array([d.position for d in a])
    assert pos.min() >= 0 and pos.max() <= 1100.0
    assert sum(d.weight for d in a) == pytest.approx(1.0)


def test_place_devices_mean_near_centre():
    world = build_world(WorldConfig())
    pos = np.array([d.position for d in place_devices(world, 10 ** 5, seed=1)])
    assert np.all(np.abs(pos.mean(axis=0) - 550.0) < 0.02 * 1100.0)


def test_cluster_counts_full_size_config():
    world = build_world(WorldConfig())
    devices = place_devices(world, 300, seed=3)
    clusters = cluster_devices(devices, 25, world.cell_size)
    assert len(clusters) == 12
    assert all(c.size <= 25 for c in clusters)


def test_single_cluster_when_capacity_equals_count():
    world = build_world(WorldConfig())
    devices = place_devices(world, 17, seed=0)
    clusters = cluster_devices(devices, 17)
    assert len(clusters) == 1
    assert sorted(clusters[0].member_ids) == list(range(17))


def test_sequential_fill_sizes():
    world = build_world(WorldConfig())
    clusters = cluster_devices(place_devices(world, 10, seed=0), 3)
    assert [c.size for c in clusters] == [3, 3, 3, 1]


def test_centroid_is_member_mean():
    devices = [Device(0, (0.0, 0.0), 0.5), Device(1, (10.0, 2.0), 0.5)]
    (c,) = cluster_devices(devices, 2)
    assert c.centroid == (5.0, 1.0)


@settings(max_examples=50, deadline=None)
@given(count=st.integers(1, 120), capacity=st.integers(1, 40), seed=st.integers(0, 2 ** 16))
def test_clusters_partition_devices(count, capacity, seed):
    world = build_world(WorldConfig())
    devices = place_devices(world, count, seed)
    clusters = cluster_devices(devices, capacity, world.cell_size)
    members = [m for c in clusters for m in c.member_ids]
    assert sorted(members) == list(range(count))
    assert len(clusters) == -(-count // capacity)
    assert all(1 <= c.size <= capacity for c in clusters)


def test_move_north_adds_cell_size():
    world = build_world(WorldConfig())
    cell = (0, 0)
    nxt = apply_move(cell, Direction.NORTH, world)
    assert nxt == (0, 1)
    np.testing.assert_allclose(world.cell_center(nxt) - world.cell_center(cell), [0.0, 100.0])


def test_move_into_restricted_zone_is_hover():
    world = build_world(WorldConfig(5, 5, restricted_cells=frozenset({(3, 2)})))
    assert apply_move((2, 2), Direction.EAST, world) == (2, 2)
    assert apply_move((4, 4), Direction.NORTH, world) == (4, 4)


restricted_sets = st.sets(st.tuples(st.integers(0, 5), st.integers(0, 4)), max_size=12).map(
    lambda s: frozenset(c for c in s if c != (3, 2)))


@settings(max_examples=60, deadline=None)
@given(restricted=restricted_sets)
def test_moves_always_land_on_valid_cells(restricted):
    world = build_world(WorldConfig(6, 5, restricted_cells=restricted))
    for cell in world.valid_cells():
        assert apply_move(cell, Direction.HOVER, world) == cell
        for d in Direction:
            assert world.is_valid(apply_move(cell, d, world))
        for there, back in ((Direction.NORTH, Direction.SOUTH), (Direction.EAST, Direction.WEST)):
            mid = apply_move(cell, there, world)
            if mid != cell:
                assert apply_move(mid, back, world) == cell
