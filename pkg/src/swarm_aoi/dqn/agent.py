from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .network import (AdamState, act_epsilon_greedy, adam_step, forward, init_mlp,
                      sync_target, td_loss)
from .replay import ReplayBuffer


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-4
    discount: float = 0.99
    episodes: int = 100_000
    batch_size: int = 64
    replay_capacity: int = 50_000
    target_sync_interval: int = 500
    epsilon_start: float = 1.0
    epsilon_end: float = 0.05
    epsilon_decay_fraction: float = 0.6
    hidden: tuple[int, ...] = (64, 128, 64)
    # one gradient step every `train_every` frames per learner
    train_every: int = 1
    # None -> batch_size
    learning_starts: Optional[int] = None

    def __post_init__(self):
        if not self.learning_rate >= 0:
            raise ValueError("learning_rate must be >= 0")
        if not 0 <= self.discount < 1:
            raise ValueError("discount must lie in [0, 1)")
        for name in ("epsilon_start", "epsilon_end"):
            if not 0 <= getattr(self, name) <= 1:
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.batch_size < 1 or self.replay_capacity < self.batch_size:
            raise ValueError("need 1 <= batch_size <= replay_capacity")
        if self.train_every < 1 or self.target_sync_interval < 1 or self.episodes < 0:
            raise ValueError("train_every, target_sync_interval must be >= 1, episodes >= 0")
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))


def linear_epsilon(episode: int, config: TrainConfig) -> float:
    """Linear anneal from start to end over the first decay fraction of the
    episode budget, then flat."""
    horizon = config.epsilon_decay_fraction * config.episodes
    if horizon <= 0 or episode >= horizon:
        return config.epsilon_end
    frac = episode / horizon
    return config.epsilon_start + frac * (config.epsilon_end - config.epsilon_start)


class DqnAgent:
    """Q-network + target network + replay + Adam for one learner.

    ``macs`` counts every multiply-accumulate spent in forward and backward
    passes; a backward pass costs twice its forward pass.
    """

    def __init__(self, input_dim: int, num_actions: int, config: TrainConfig,
                 seed: np.random.SeedSequence | int = 0):
        ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
        init_ss, policy_ss, replay_ss = ss.spawn(3)
        self.config = config
        self.input_dim = input_dim
        self.num_actions = num_actions
        self.params = init_mlp([input_dim, *config.hidden, num_actions],
                               np.random.default_rng(init_ss))
        self.target = sync_target(self.params)
        self.adam = AdamState.zeros_like(self.params)
        self.buffer = ReplayBuffer(config.replay_capacity, input_dim)
        self.policy_rng = np.random.default_rng(policy_ss)
        self.replay_rng = np.random.default_rng(replay_ss)
        self.learn_steps = 0
        self.target_syncs = 0
        self.macs = 0
        self._fwd = self.params.macs_per_sample

    def q_values(self, state: np.ndarray) -> np.ndarray:
        self.macs += self._fwd
        return forward(self.params, state)

    def act(self, state: np.ndarray, mask: np.ndarray, epsilon: float) -> int:
        # exploratory draws skip the forward pass
        valid = np.flatnonzero(mask)
        if valid.size == 0:
            raise ValueError("no valid action under mask")
        if epsilon > 0 and self.policy_rng.random() < epsilon:
            return int(valid[self.policy_rng.integers(valid.size)])
        return act_epsilon_greedy(self.q_values(state), mask, 0.0, self.policy_rng)

    def greedy(self, state: np.ndarray, mask: np.ndarray) -> int:
        return act_epsilon_greedy(self.q_values(state), mask, 0.0, self.policy_rng)

    def remember(self, state, action, reward, next_state, terminal):
        self.buffer.add(state, action, reward, next_state, terminal)

    def learn(self) -> Optional[float]:
        cfg = self.config
        starts = cfg.batch_size if cfg.learning_starts is None else max(cfg.learning_starts,
                                                                         cfg.batch_size)
        if len(self.buffer) < starts:
            return None
        batch = self.buffer.sample(cfg.batch_size, self.replay_rng)
        loss, grads = td_loss(self.params, self.target, batch, cfg.discount)
        # target forward + online forward + backward (2x)
        self.macs += 4 * cfg.batch_size * self._fwd
        adam_step(self.params, grads, self.adam, cfg.learning_rate)
        self.learn_steps += 1
        if self.learn_steps % cfg.target_sync_interval == 0:
            self.target = sync_target(self.params)
            self.target_syncs += 1
        return loss

    # checkpoint support -------------------------------------------------
    def state_dict(self) -> dict:
        d = {}
        for name, p in (("params", self.params), ("target", self.target)):
            for i, (w, b) in enumerate(zip(p.weights, p.biases)):
                d[f"{name}.w{i}"] = w
                d[f"{name}.b{i}"] = b
        for i, (m, v) in enumerate(zip(self.adam.m, self.adam.v)):
            d[f"adam.m{i}"] = m
            d[f"adam.v{i}"] = v
        for k, v in self.buffer.state_dict().items():
            d[f"buffer.{k}"] = v
        return d

    def meta(self) -> dict:
        return {"input_dim": self.input_dim, "num_actions": self.num_actions,
                "sizes": self.params.sizes, "adam_t": self.adam.t,
                "learn_steps": self.learn_steps, "target_syncs": self.target_syncs,
                "macs": self.macs,
                "policy_rng": self.policy_rng.bit_generator.state,
                "replay_rng": self.replay_rng.bit_generator.state}

    def load(self, meta: dict, arrays: dict):
        if meta["sizes"] != self.params.sizes:
            raise ValueError(f"checkpoint layer sizes {meta['sizes']} != {self.params.sizes}")
        n = len(self.params.weights)
        for name, p in (("params", self.params), ("target", self.target)):
            for i in range(n):
                p.weights[i][...] = arrays[f"{name}.w{i}"]
                p.biases[i][...] = arrays[f"{name}.b{i}"]
        for i in range(2 * n):
            self.adam.m[i][...] = arrays[f"adam.m{i}"]
            self.adam.v[i][...] = arrays[f"adam.v{i}"]
        self.buffer.load_state_dict({k[len("buffer."):]: v for k, v in arrays.items()
                                     if k.startswith("buffer.")})
        self.adam.t = meta["adam_t"]
        self.learn_steps = meta["learn_steps"]
        self.target_syncs = meta["target_syncs"]
        self.macs = meta["macs"]
        self.policy_rng.bit_generator.state = meta["policy_rng"]
        self.replay_rng.bit_generator.state = meta["replay_rng"]
