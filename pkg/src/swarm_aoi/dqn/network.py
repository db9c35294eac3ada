"""Rectifier MLP, temporal-difference loss with hand-written backprop, Adam."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np


@dataclass
class MlpParams:
    weights: list[np.ndarray]
    biases: list[np.ndarray]

    @property
    def sizes(self) -> list[int]:
        return [self.weights[0].shape[0]] + [w.shape[1] for w in self.weights]

    @property
    def macs_per_sample(self) -> int:
        """Multiply-accumulates of one forward pass for a single input."""
        return int(sum(w.shape[0] * w.shape[1] for w in self.weights))

    def copy(self) -> "MlpParams":
        return MlpParams([w.copy() for w in self.weights], [b.copy() for b in self.biases])

    def arrays(self) -> list[np.ndarray]:
        return [*self.weights, *self.biases]


def init_mlp(sizes: Sequence[int], rng: np.random.Generator) -> MlpParams:
    """Weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)), biases zero."""
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        bound = 1.0 / np.sqrt(fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return MlpParams(weights, biases)


def _trace(params: MlpParams, x: np.ndarray) -> list[np.ndarray]:
    acts = [x]
    last = len(params.weights) - 1
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        x = x @ w + b
        if i < last:
            x = np.maximum(x, 0.0)
        acts.append(x)
    return acts


def forward(params: MlpParams, state: np.ndarray) -> np.ndarray:
    """Q-values for one state (1-D input) or a batch (2-D input)."""
    state = np.asarray(state, dtype=float)
    if state.shape[-1] != params.weights[0].shape[0]:
        raise ValueError(f"input width {state.shape[-1]} != network input "
                         f"{params.weights[0].shape[0]}")
    return _trace(params, state)[-1]


@dataclass
class Batch:
    states: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    next_states: np.ndarray
    terminals: np.ndarray

    def __len__(self):
        return len(self.actions)

    @classmethod
    def from_transitions(cls, transitions) -> "Batch":
        return cls(np.array([t.state for t in transitions], dtype=float),
                   np.array([t.action for t in transitions], dtype=np.int64),
                   np.array([t.reward for t in transitions], dtype=float),
                   np.array([t.next_state for t in transitions], dtype=float),
                   np.array([t.terminal for t in transitions], dtype=bool))


def td_targets(target_params: MlpParams, batch: Batch, discount: float) -> np.ndarray:
    bootstrap = forward(target_params, batch.next_states).max(axis=1)
    return batch.rewards + discount * np.where(batch.terminals, 0.0, bootstrap)


def td_loss(params: MlpParams, target_params: MlpParams, batch: Batch,
            discount: float) -> tuple[float, MlpParams]:
    """Mean squared TD error and its gradient w.r.t. ``params``.

    The bootstrap term comes from ``target_params`` and is treated as a
    constant.
    """
    if len(batch) == 0:
        raise ValueError("empty batch")
    targets = td_targets(target_params, batch, discount)
    acts = _trace(params, batch.states)
    rows = np.arange(len(batch))
    err = acts[-1][rows, batch.actions] - targets
    loss = float(np.mean(err ** 2))

    delta = np.zeros_like(acts[-1])
    delta[rows, batch.actions] = 2.0 * err / len(batch)
    gw, gb = [None] * len(params.weights), [None] * len(params.weights)
    for i in reversed(range(len(params.weights))):
        gw[i] = acts[i].T @ delta
        gb[i] = delta.sum(axis=0)
        if i:
            delta = (delta @ params.weights[i].T) * (acts[i] > 0)
    return loss, MlpParams(gw, gb)


@dataclass
class AdamState:
    m: list[np.ndarray]
    v: list[np.ndarray]
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def zeros_like(cls, params: MlpParams, **kw) -> "AdamState":
        arrays = params.arrays()
        return cls([np.zeros_like(a) for a in arrays], [np.zeros_like(a) for a in arrays], **kw)


def adam_step(params: MlpParams, grads: MlpParams, state: AdamState, lr: float) -> MlpParams:
    """One bias-corrected Adam update, applied in place to ``params``."""
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1 ** state.t
    c2 = 1.0 - b2 ** state.t
    for p, g, m, v in zip(params.arrays(), grads.arrays(), state.m, state.v):
        if p.shape != g.shape:
            raise ValueError(f"gradient shape {g.shape} != parameter shape {p.shape}")
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        p -= lr * (m / c1) / (np.sqrt(v / c2) + state.eps)
    return params


def sync_target(params: MlpParams) -> MlpParams:
    return params.copy()


def act_epsilon_greedy(qvals: np.ndarray, mask: np.ndarray, epsilon: float,
                       rng: np.random.Generator) -> int:
    """Uniform valid action with probability ``epsilon``, otherwise the
    lowest-index maximiser among valid actions."""
    valid = np.flatnonzero(mask)
    if valid.size == 0:
        raise ValueError("no valid action under mask")
    if epsilon > 0 and rng.random() < epsilon:
        return int(valid[rng.integers(valid.size)])
    q = np.where(mask, qvals, -np.inf)
    return int(np.argmax(q))
