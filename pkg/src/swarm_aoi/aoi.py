"""Frame-granular age of information and the per-UAV reward."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np


@dataclass(frozen=True)
class AoiState:
    ages: np.ndarray
    max_age: int = 30

    def __post_init__(self):
        ages = np.asarray(self.ages, dtype=np.int64).copy()
        ages.setflags(write=False)
        object.__setattr__(self, "ages", ages)

    @classmethod
    def initial(cls, num_devices: int, max_age: int = 30, initial_age: int = 1) -> "AoiState":
        return cls(np.full(num_devices, initial_age, dtype=np.int64), max_age)

    def __eq__(self, other):
        return (isinstance(other, AoiState) and self.max_age == other.max_age
                and np.array_equal(self.ages, other.ages))


@dataclass(frozen=True)
class RewardConfig:
    weights: np.ndarray
    power_penalty: float = 5.0

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if np.any(w <= 0):
            raise ValueError("weights must be strictly positive")
        object.__setattr__(self, "weights", w)

    @classmethod
    def uniform(cls, num_devices: int, power_penalty: float = 5.0) -> "RewardConfig":
        return cls(np.full(num_devices, 1.0 / num_devices), power_penalty)


def served_mask(num_devices: int, served: Iterable[int]) -> np.ndarray:
    mask = np.zeros(num_devices, dtype=bool)
    idx = np.fromiter(served, dtype=np.int64)
    if idx.size and (idx.min() < 0 or idx.max() >= num_devices):
        raise IndexError("served device id out of range")
    mask[idx] = True
    return mask


def update_aoi(state: AoiState, served) -> AoiState:
    """Served devices restart at age 1, the rest age by one frame up to the cap.

    ``served`` is either a collection of device ids or a boolean mask.
    """
    if not (isinstance(served, np.ndarray) and served.dtype == bool):
        served = served_mask(len(state.ages), list(served))
    ages = np.where(served, 1, np.minimum(state.max_age, state.ages + 1))
    return AoiState(ages, state.max_age)


def weighted_age(state: AoiState, weights: Sequence[float]) -> float:
    weights = np.asarray(weights, dtype=float)
    if weights.shape != state.ages.shape:
        raise ValueError(f"weights shape {weights.shape} != ages shape {state.ages.shape}")
    return float(weights @ state.ages)


def step_reward(state: AoiState, powers: Sequence[float], config: RewardConfig,
                cluster_size: int) -> float:
    """Reward of one UAV: minus the weighted network age (after this frame's
    update) minus the power it made its served devices spend, scaled by
    ``power_penalty / cluster_size``."""
    if cluster_size < 1:
        raise ValueError("cluster_size must be >= 1")
    return (-weighted_age(state, config.weights)
            - config.power_penalty / cluster_size * float(np.sum(powers)))
