"""Agent-facing view of the swarm: scenarios, observations, masks, one frame.

An action index packs a movement direction and a cluster choice as
``cluster * 5 + direction``.  Joint actions (centralised learner) are the
mixed-radix number ``((a_0 * A) + a_1) * A + ...`` with UAV 0 most significant.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Hashable, Optional, Sequence

import numpy as np

from . import aoi as aoi_mod
from .aoi import AoiState, RewardConfig
from .channel import (CycleTiming, LinkBudget, RateConfig, cluster_capacity, cycle_timing,
                      gain_bs, gain_device, tx_power)
from .world import (NUM_DIRECTIONS, OFFSETS, Cell, Cluster, Device, Direction, GridWorld,
                    UavConfig, WorldConfig, apply_move, assign_clusters, build_world,
                    cluster_devices, place_devices, start_cells)

DEFAULT_ACTION_CAP = 10 ** 6


class DimensionalityError(ValueError):
    """Joint action space too large to tabulate a Q-value per action."""


@dataclass(frozen=True)
class AgentAction:
    direction: Direction
    cluster: int

    @property
    def index(self) -> int:
        return self.cluster * NUM_DIRECTIONS + int(self.direction)

    @classmethod
    def from_index(cls, index: int) -> "AgentAction":
        cluster, direction = divmod(int(index), NUM_DIRECTIONS)
        return cls(Direction(direction), cluster)


@dataclass(frozen=True)
class AgentState:
    uav_cell: Cell
    ages: np.ndarray
    peer_actions: Optional[tuple[int, ...]] = None


@dataclass(frozen=True)
class Transition:
    state: np.ndarray
    action: int
    reward: float
    next_state: np.ndarray
    terminal: bool


@dataclass(frozen=True)
class Scenario:
    """Everything one episode needs: geometry, devices, clusters, radio, reward."""
    world: GridWorld
    devices: tuple[Device, ...]
    clusters: tuple[Cluster, ...]
    budget: LinkBudget
    rate: RateConfig
    uav: UavConfig
    reward: RewardConfig
    capacity: int
    timing: CycleTiming
    max_age: int = 30
    initial_age: int = 1
    horizon: int = 60
    age_encoding: str = "cluster"
    # precomputed tables
    device_power: np.ndarray = field(default=None, repr=False, compare=False)
    cluster_index: tuple = field(default=None, repr=False, compare=False)

    @property
    def num_devices(self) -> int:
        return len(self.devices)

    @property
    def num_clusters(self) -> int:
        return len(self.clusters)

    @property
    def num_uavs(self) -> int:
        return self.uav.count

    @property
    def num_actions(self) -> int:
        return NUM_DIRECTIONS * self.num_clusters

    @property
    def age_width(self) -> int:
        return self.num_clusters if self.age_encoding == "cluster" else self.num_devices

    def initial_aoi(self) -> AoiState:
        return AoiState.initial(self.num_devices, self.max_age, self.initial_age)

    def start_cells(self) -> list[Cell]:
        return start_cells(self.world, self.uav)


def build_scenario(world_config: WorldConfig, num_devices: int, budget: LinkBudget,
                   rate: RateConfig, uav: UavConfig, power_penalty: float = 5.0,
                   max_age: int = 30, initial_age: int = 1, horizon: int = 60,
                   age_encoding: str = "cluster", device_seed: Optional[int] = None,
                   ) -> Scenario:
    if age_encoding not in ("cluster", "device"):
        raise ValueError(f"unknown age encoding {age_encoding!r}")
    if not 1 <= initial_age <= max_age:
        raise ValueError("initial_age must lie in [1, max_age]")
    world = build_world(world_config)
    capacity = cluster_capacity(rate, world_config.cell_size, uav.velocity, budget.packet_size)
    seed = world_config.rng_seed if device_seed is None else device_seed
    devices = place_devices(world, num_devices, seed)
    clusters = cluster_devices(devices, capacity, world_config.cell_size)
    devices = assign_clusters(devices, clusters)
    start_cells(world, uav)  # validates configured start positions

    # transmit power of every device towards a UAV hovering at every cell centre
    nx, ny = world.shape
    L = world.cell_size
    centres = np.stack(np.meshgrid((np.arange(nx) + 0.5) * L, (np.arange(ny) + 0.5) * L,
                                   indexing="ij"), axis=-1)
    pos = np.array([d.position for d in devices])
    dist = np.linalg.norm(centres[:, :, None, :] - pos[None, None, :, :], axis=-1)
    power = tx_power(gain_device(uav.height, dist, budget), budget)
    power.setflags(write=False)
    index = tuple(np.array(c.member_ids, dtype=np.int64) for c in clusters)
    return Scenario(world=world, devices=tuple(devices), clusters=tuple(clusters),
                    budget=budget, rate=rate, uav=uav,
                    reward=RewardConfig.uniform(num_devices, power_penalty),
                    capacity=capacity, timing=cycle_timing(L, uav.velocity, rate.duplex),
                    max_age=max_age, initial_age=initial_age, horizon=horizon,
                    age_encoding=age_encoding, device_power=power, cluster_index=index)


def action_space_size(num_clusters: int, num_uavs_joint: int = 1,
                      cap: Optional[int] = DEFAULT_ACTION_CAP) -> int:
    if num_clusters < 1 or num_uavs_joint < 1:
        raise ValueError("num_clusters and num_uavs_joint must be >= 1")
    size = (NUM_DIRECTIONS * num_clusters) ** num_uavs_joint
    if cap is not None and size > cap:
        raise DimensionalityError(
            f"joint action space (5*{num_clusters})^{num_uavs_joint} = {size:,} exceeds the "
            f"cap of {cap:,}: a centralised Q-network cannot cover it (curse of "
            f"dimensionality); reduce UAVs/clusters or pass an explicit override")
    return size


def cluster_ages(ages: np.ndarray, scenario: Scenario) -> np.ndarray:
    return np.array([ages[idx].max() for idx in scenario.cluster_index])


def _age_features(ages: np.ndarray, scenario: Scenario) -> np.ndarray:
    ages = np.asarray(ages)
    summary = cluster_ages(ages, scenario) if scenario.age_encoding == "cluster" else ages
    return summary / scenario.max_age


def _position_features(cell: Cell, world: GridWorld) -> np.ndarray:
    return world.cell_center(cell) / np.array(world.extent)


def encode_state(state: AgentState, scenario: Scenario) -> np.ndarray:
    """``[x/X, y/Y, ages/A_max, one-hot(peer action) ...]``; all entries in [0, 1].

    A negative peer action encodes as an all-zero block (peer not yet known).
    """
    parts = [_position_features(state.uav_cell, scenario.world),
             _age_features(state.ages, scenario)]
    for a in state.peer_actions or ():
        onehot = np.zeros(scenario.num_actions)
        if a >= 0:
            onehot[a] = 1.0
        parts.append(onehot)
    return np.concatenate(parts)


def encode_joint_state(cells: Sequence[Cell], ages: np.ndarray, scenario: Scenario) -> np.ndarray:
    """Centralised observation: every UAV position followed by the ages."""
    parts = [_position_features(c, scenario.world) for c in cells]
    parts.append(_age_features(ages, scenario))
    return np.concatenate(parts)


def state_width(scenario: Scenario, num_peers: int = 0, joint: bool = False) -> int:
    if joint:
        return 2 * scenario.num_uavs + scenario.age_width
    return 2 + scenario.age_width + num_peers * scenario.num_actions


def direction_mask(cell: Cell, world: GridWorld) -> np.ndarray:
    mask = np.zeros(NUM_DIRECTIONS, dtype=bool)
    for d, (di, dj) in OFFSETS.items():
        mask[d] = d is Direction.HOVER or world.is_valid((cell[0] + di, cell[1] + dj))
    return mask


def valid_action_mask(state: AgentState, world: GridWorld, num_clusters: int) -> np.ndarray:
    """True for every (cluster, direction) whose move stays on valid cells;
    the cluster choice never masks."""
    return np.tile(direction_mask(state.uav_cell, world), num_clusters)


def joint_action_mask(cells: Sequence[Cell], world: GridWorld, num_clusters: int) -> np.ndarray:
    mask = np.ones(1, dtype=bool)
    for cell in cells:
        m = np.tile(direction_mask(cell, world), num_clusters)
        mask = (mask[:, None] & m[None, :]).ravel()
    return mask


def decode_joint_action(index: int, num_actions: int, num_uavs: int) -> list[AgentAction]:
    digits = np.unravel_index(int(index), (num_actions,) * num_uavs)
    return [AgentAction.from_index(int(a)) for a in digits]


def encode_joint_action(actions: Sequence[AgentAction], num_actions: int) -> int:
    index = 0
    for a in actions:
        index = index * num_actions + a.index
    return index


@dataclass
class StepResult:
    positions: list[Cell]
    aoi: AoiState
    rewards: np.ndarray
    powers: np.ndarray
    record: dict
    served: np.ndarray
    uav_power: np.ndarray


def env_step(positions: Sequence[Cell], joint_action: Sequence[AgentAction], aoi: AoiState,
             scenario: Scenario, frame: int = 0) -> StepResult:
    """Advance one frame: move, poll the chosen clusters, relay, age update.

    A cluster picked by several UAVs is polled once, by the lowest-indexed of
    them; the others spend no device power that frame.
    """
    if len(joint_action) != len(positions):
        raise ValueError(f"{len(joint_action)} actions for {len(positions)} UAVs")
    world = scenario.world
    new_positions = [apply_move(p, a.direction, world) for p, a in zip(positions, joint_action)]

    served = np.zeros(scenario.num_devices, dtype=bool)
    powers = np.zeros(scenario.num_devices)
    uav_power = np.zeros(len(positions))
    polled = set()
    for u, (cell, a) in enumerate(zip(new_positions, joint_action)):
        if not 0 <= a.cluster < scenario.num_clusters:
            raise ValueError(f"cluster {a.cluster} out of range for UAV {u}")
        if a.cluster in polled:
            continue
        polled.add(a.cluster)
        members = scenario.cluster_index[a.cluster]
        p = scenario.device_power[cell[0], cell[1], members]
        served[members] = True
        powers[members] = p
        uav_power[u] = p.sum()

    new_aoi = aoi_mod.update_aoi(aoi, served)
    cfg = scenario.reward
    age_term = float(cfg.weights @ new_aoi.ages)
    rewards = -age_term - cfg.power_penalty / scenario.capacity * uav_power

    bs = world.bs_position
    bs_gain = [float(gain_bs(scenario.uav.height, np.linalg.norm(world.cell_center(c) - bs),
                             world.config.bs_height, scenario.budget)) for c in new_positions]
    total_power = float(powers.sum())
    record = {
        "frame": frame,
        "cells": [list(c) for c in new_positions],
        "clusters": [int(a.cluster) for a in joint_action],
        "directions": [Direction(a.direction).name.lower() for a in joint_action],
        "served": served.astype(int).tolist(),
        "ages": new_aoi.ages.tolist(),
        "weighted_age": age_term,
        "rewards": rewards.tolist(),
        "total_power": total_power,
        "power_term_per_cluster": cfg.power_penalty / scenario.capacity * total_power,
        "power_term_per_device": cfg.power_penalty / scenario.num_devices * total_power,
        "gain_bs": bs_gain,
    }
    return StepResult(new_positions, new_aoi, rewards, powers, record, served, uav_power)


class SwarmMDP:
    """Deterministic discrete view of a scenario for the exact oracles.

    States are ``(cells, ages)`` tuples; actions are joint action indices.
    Rewards follow the centralised convention (age term plus the summed power
    term of all UAVs), which for a single UAV is exactly its own reward.
    """

    def __init__(self, scenario: Scenario):
        self.scenario = scenario
        self.num_uavs = scenario.num_uavs
        self.num_actions = scenario.num_actions ** self.num_uavs
        self.horizon = scenario.horizon
        self._cache: dict = {}

    def initial_state(self) -> Hashable:
        return (tuple(self.scenario.start_cells()), tuple(self.scenario.initial_aoi().ages.tolist()))

    def valid_actions(self, state) -> np.ndarray:
        cells, _ = state
        mask = joint_action_mask(cells, self.scenario.world, self.scenario.num_clusters)
        return np.flatnonzero(mask)

    def step(self, state, action: int):
        key = (state, int(action))
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        cells, ages = state
        sc = self.scenario
        joint = decode_joint_action(action, sc.num_actions, self.num_uavs)
        res = env_step(list(cells), joint, AoiState(np.array(ages), sc.max_age), sc)
        reward = -float(sc.reward.weights @ res.aoi.ages) - (
            sc.reward.power_penalty / sc.capacity * float(res.uav_power.sum()))
        out = ((tuple(res.positions), tuple(res.aoi.ages.tolist())), reward)
        self._cache[key] = out
        return out
