"""Exact and tabular solvers for small deterministic MDPs.

An MDP here is any object exposing ``num_actions``, ``horizon``,
``initial_state()``, ``step(state, action) -> (next_state, reward)`` and
optionally ``valid_actions(state)``.  States must be hashable.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Hashable, Optional, Sequence

import numpy as np


class OracleCapError(ValueError):
    pass


def _valid(mdp, state) -> np.ndarray:
    if hasattr(mdp, "valid_actions"):
        return np.asarray(mdp.valid_actions(state), dtype=np.int64)
    return np.arange(mdp.num_actions)


class TableMDP:
    """Deterministic MDP given by ``next_state[s, a]`` and ``reward[s, a]``."""

    def __init__(self, next_state, reward, start: int = 0, horizon: int = 1):
        self.next_state = np.asarray(next_state, dtype=np.int64)
        self.reward = np.asarray(reward, dtype=float)
        self.num_actions = self.next_state.shape[1]
        self.start = start
        self.horizon = horizon

    def initial_state(self):
        return self.start

    def step(self, state, action):
        return int(self.next_state[state, action]), float(self.reward[state, action])


def reachable_states(mdp, horizon: int, cap: int = 10 ** 5) -> list:
    """States visited by any action sequence of length <= ``horizon``, in BFS order."""
    start = mdp.initial_state()
    seen = {start: None}
    frontier = [start]
    pairs = 0
    for _ in range(horizon):
        nxt = []
        for s in frontier:
            for a in _valid(mdp, s):
                pairs += 1
                if pairs > cap:
                    raise OracleCapError(f"more than {cap} state-action pairs reachable")
                s2, _ = mdp.step(s, int(a))
                if s2 not in seen:
                    seen[s2] = None
                    nxt.append(s2)
        frontier = nxt
    return list(seen)


def finite_horizon_dp(mdp, horizon: int, cap: int = 10 ** 6) -> tuple[float, list[int]]:
    """Backward induction: best undiscounted return over ``horizon`` steps from
    the initial state, and one action sequence attaining it (ties -> lowest
    action index)."""
    start = mdp.initial_state()
    # forward sweep: reachable state set per stage
    stages = [[start]]
    work = 0
    for t in range(horizon):
        nxt = {}
        for s in stages[-1]:
            for a in _valid(mdp, s):
                work += 1
                if work > cap:
                    raise OracleCapError(f"state-action-horizon product exceeds {cap}")
                nxt.setdefault(mdp.step(s, int(a))[0], None)
        stages.append(list(nxt))
    value = {s: 0.0 for s in stages[horizon]}
    policy: list[dict] = [None] * horizon
    for t in reversed(range(horizon)):
        v_t, pi_t = {}, {}
        for s in stages[t]:
            best, best_a = -np.inf, None
            for a in _valid(mdp, s):
                s2, r = mdp.step(s, int(a))
                q = r + value[s2]
                if q > best:
                    best, best_a = q, int(a)
            v_t[s], pi_t[s] = best, best_a
        value, policy[t] = v_t, pi_t
    plan, s = [], start
    for t in range(horizon):
        a = policy[t][s]
        plan.append(a)
        s = mdp.step(s, a)[0]
    return float(value[start]), plan


def rollout_return(mdp, policy: Callable[[Hashable, int], int], horizon: Optional[int] = None
                   ) -> float:
    """Undiscounted return of a deterministic policy ``policy(state, t)``."""
    horizon = mdp.horizon if horizon is None else horizon
    s, total = mdp.initial_state(), 0.0
    for t in range(horizon):
        s, r = mdp.step(s, policy(s, t))
        total += r
    return total


@dataclass
class QTable:
    num_actions: int
    values: dict = field(default_factory=dict)
    initial: float = 0.0
    # keys are (t, state) pairs: a nonstationary finite-horizon policy
    time_indexed: bool = False

    def key(self, state, t: int):
        return (t, state) if self.time_indexed else state

    def row(self, state) -> np.ndarray:
        q = self.values.get(state)
        if q is None:
            q = self.values[state] = np.full(self.num_actions, self.initial)
        return q

    def greedy(self, state, valid: Sequence[int]) -> int:
        q = self.row(state)
        valid = np.asarray(valid)
        return int(valid[np.argmax(q[valid])])


@dataclass(frozen=True)
class TabularConfig:
    learning_rate: float = 0.5
    discount: float = 0.99
    episodes: int = 2000
    epsilon_start: float = 1.0
    epsilon_end: float = 0.0
    epsilon_decay_fraction: float = 0.8
    tolerance: Optional[float] = None
    seed: int = 0
    cap: int = 10 ** 5
    initial_value: float = 0.0
    # False: the horizon is a time limit and the last step still bootstraps
    terminal_at_horizon: bool = True
    # learn Q(t, s, a) instead of Q(s, a)
    time_indexed: bool = False


def tabular_q_learning(mdp, config: TabularConfig = TabularConfig()) -> QTable:
    """Q-learning with ε-greedy behaviour on a small deterministic MDP.

    Stops after ``config.episodes`` episodes, or earlier once a whole episode
    changes no entry by more than ``config.tolerance``.  The last step of an
    episode does not bootstrap unless ``terminal_at_horizon`` is off.
    """
    states = reachable_states(mdp, mdp.horizon, cap=config.cap)
    table = QTable(mdp.num_actions, initial=config.initial_value,
                   time_indexed=config.time_indexed)
    valid = {s: _valid(mdp, s) for s in states}
    rng = np.random.default_rng(config.seed)
    alpha, gamma = config.learning_rate, config.discount
    decay = config.epsilon_decay_fraction * config.episodes
    for ep in range(config.episodes):
        eps = (config.epsilon_end if decay <= 0 or ep >= decay else
               config.epsilon_start + ep / decay * (config.epsilon_end - config.epsilon_start))
        s = mdp.initial_state()
        biggest = 0.0
        for t in range(mdp.horizon):
            acts = valid[s]
            if rng.random() < eps:
                a = int(acts[rng.integers(acts.size)])
            else:
                a = table.greedy(table.key(s, t), acts)
            s2, r = mdp.step(s, a)
            last = config.terminal_at_horizon and t == mdp.horizon - 1
            target = r if last else r + gamma * table.row(table.key(s2, t + 1))[valid[s2]].max()
            q = table.row(table.key(s, t))
            delta = alpha * (target - q[a])
            q[a] += delta
            biggest = max(biggest, abs(delta))
            s = s2
        if config.tolerance is not None and biggest < config.tolerance:
            break
    return table


def greedy_return(mdp, table: QTable) -> float:
    return rollout_return(mdp, lambda s, t: table.greedy(table.key(s, t), _valid(mdp, s)))
