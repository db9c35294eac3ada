import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import make_scenario
from swarm_aoi.aoi import AoiState, update_aoi
from swarm_aoi.mdp import (AgentAction, AgentState, DimensionalityError, action_space_size,
                           decode_joint_action, encode_joint_action, encode_state, env_step,
                           joint_action_mask, valid_action_mask)
from swarm_aoi.world import Direction


def test_encode_at_bs_all_fresh():
    sc = make_scenario(nx=11, ny=11, devices=40, capacity=10)
    v = encode_state(AgentState(sc.world.bs_cell, sc.initial_aoi().ages), sc)
    np.testing.assert_allclose(v[:2], [0.5, 0.5])
    np.testing.assert_allclose(v[2:], np.full(sc.num_clusters, 1 / 30))


def test_encode_saturated():
    sc = make_scenario(nx=11, ny=11, devices=40, capacity=10)
    v = encode_state(AgentState((0, 3), np.full(40, 30)), sc)
    np.testing.assert_array_equal(v[2:], 1.0)


def test_encode_locality():
    sc = make_scenario(nx=5, ny=5, devices=12, capacity=5)
    ages = np.arange(1, 13)
    a = encode_state(AgentState((0, 0), ages), sc)
    b = encode_state(AgentState((3, 1), ages), sc)
    assert np.flatnonzero(a != b).tolist() == [0, 1]


def test_encode_device_mode_and_peers():
    sc = make_scenario(devices=4, capacity=2, age_encoding="device")
    v = encode_state(AgentState((1, 1), np.array([1, 2, 3, 4]), (7, -1)), sc)
    assert v.shape == (2 + 4 + 2 * sc.num_actions,)
    np.testing.assert_allclose(v[2:6], np.array([1, 2, 3, 4]) / 30)
    peers = v[6:].reshape(2, -1)
    assert peers[0].tolist() == [1.0 if i == 7 else 0.0 for i in range(sc.num_actions)]
    assert not peers[1].any()


def test_action_space_sizes():
    assert action_space_size(12) == 60
    assert action_space_size(12, 3) == 216000
    assert action_space_size(1) == 5
    with pytest.raises(DimensionalityError, match="dimensionality"):
        action_space_size(12, 4)


def test_action_index_roundtrip():
    for idx in range(60):
        assert AgentAction.from_index(idx).index == idx
    joint = [AgentAction(Direction.EAST, 3), AgentAction(Direction.HOVER, 0)]
    assert decode_joint_action(encode_joint_action(joint, 20), 20, 2) == joint


def test_mask_corner_interior_enclosed():
    sc = make_scenario(nx=5, ny=5, devices=4, capacity=2)
    corner = valid_action_mask(AgentState((0, 0), None), sc.world, 1)
    assert corner.sum() == 3 and corner[Direction.HOVER]
    assert valid_action_mask(AgentState((2, 2), None), sc.world, 1).all()
    boxed = make_scenario(nx=5, ny=5, restricted=[(1, 2), (3, 2), (2, 1), (2, 3)])
    m = valid_action_mask(AgentState((2, 2), None), boxed.world, 2)
    assert m.tolist() == [False, False, False, False, True] * 2


def test_joint_mask_is_product():
    sc = make_scenario(nx=3, ny=3, uavs=2)
    cells = [(0, 0), (1, 1)]
    m = joint_action_mask(cells, sc.world, 2).reshape(10, 10)
    a = valid_action_mask(AgentState(cells[0], None), sc.world, 2)
    b = valid_action_mask(AgentState(cells[1], None), sc.world, 2)
    np.testing.assert_array_equal(m, np.outer(a, b))


def test_single_cluster_full_service():
    sc = make_scenario(devices=6, capacity=6)
    aoi = AoiState(np.array([5, 9, 2, 30, 4, 1]), 30)
    res = env_step([(1, 1)], [AgentAction(Direction.HOVER, 0)], aoi, sc)
    assert res.aoi.ages.tolist() == [1] * 6


def test_duplicate_cluster_served_once():
    one = make_scenario(devices=6, capacity=2, uavs=1)
    two = make_scenario(devices=6, capacity=2, uavs=2)
    aoi = AoiState(np.array([3, 3, 4, 4, 5, 5]), 30)
    r1 = env_step([(1, 1)], [AgentAction(Direction.HOVER, 1)], aoi, one)
    r2 = env_step([(1, 1), (1, 1)], [AgentAction(Direction.HOVER, 1)] * 2, aoi, two)
    np.testing.assert_array_equal(r1.aoi.ages, r2.aoi.ages)
    members = set(two.clusters[1].member_ids)
    for d in range(6):
        assert r2.aoi.ages[d] == (1 if d in members else aoi.ages[d] + 1)
    # the second UAV polls nobody
    assert r2.uav_power[1] == 0.0 and r2.uav_power[0] > 0.0


def test_move_into_restricted_hovers_but_serves():
    sc = make_scenario(nx=3, ny=3, restricted=[(2, 1)])
    res = env_step([(1, 1)], [AgentAction(Direction.EAST, 0)], sc.initial_aoi(), sc)
    assert res.positions == [(1, 1)]
    assert res.served[list(sc.clusters[0].member_ids)].all()


def test_power_uses_destination_cell():
    sc = make_scenario(nx=3, ny=3)
    res = env_step([(1, 1)], [AgentAction(Direction.NORTH, 1)], sc.initial_aoi(), sc)
    members = list(sc.clusters[1].member_ids)
    dest = sc.world.cell_center((1, 2))
    expected = []
    for d in members:
        dist2 = np.sum((np.array(sc.devices[d].position) - dest) ** 2)
        expected.append(31 * 1e-13 / 1e3 * (100.0 ** 2 + dist2))
    np.testing.assert_allclose(res.powers[members], expected, rtol=1e-12)


@settings(max_examples=60, deadline=None)
@given(data=st.data())
def test_env_step_properties(data):
    uavs = data.draw(st.integers(1, 3))
    sc = make_scenario(nx=4, ny=4, devices=9, capacity=2, uavs=uavs, restricted=[(0, 3)])
    cells = [data.draw(st.sampled_from(sc.world.valid_cells())) for _ in range(uavs)]
    ages = np.array(data.draw(st.lists(st.integers(1, 30), min_size=9, max_size=9)))
    aoi = AoiState(ages, 30)
    joint = [AgentAction.from_index(data.draw(st.integers(0, sc.num_actions - 1)))
             for _ in range(uavs)]
    a = env_step(cells, joint, aoi, sc)
    b = env_step(cells, joint, aoi, sc)
    assert a.positions == b.positions and a.aoi == b.aoi
    np.testing.assert_array_equal(a.rewards, b.rewards)
    served = {m for act in joint for m in sc.clusters[act.cluster].member_ids}
    assert a.aoi == update_aoi(aoi, served)
    assert all(sc.world.is_valid(c) for c in a.positions)
    # shared age term: rewards differ only by each UAV's own power term
    age_term = -float(sc.reward.weights @ a.aoi.ages)
    np.testing.assert_allclose(a.rewards + sc.reward.power_penalty / sc.capacity * a.uav_power,
                               age_term, rtol=1e-12)
    for u in range(uavs):
        v = encode_state(AgentState(a.positions[u], a.aoi.ages, tuple(x.index for x in joint)), sc)
        assert v.min() >= 0.0 and v.max() <= 1.0
