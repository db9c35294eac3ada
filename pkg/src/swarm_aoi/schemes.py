"""Training schemes (centralised, cooperative, partially cooperative,
decentralised, random walk) and their signalling/computation accounting."""
from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from . import aoi as aoi_mod
from .dqn import DqnAgent, TrainConfig, linear_epsilon
from .mdp import (DEFAULT_ACTION_CAP, AgentAction, AgentState, Scenario, action_space_size,
                  decode_joint_action, direction_mask, encode_joint_state, encode_state, env_step,
                  joint_action_mask, state_width)


class SchemeKind(str, Enum):
    CRL = "C-RL"
    CO = "Co-MARL"
    PCO = "PCo-MARL"
    DMARL = "D-MARL"
    RW = "RW"


# control messages per UAV per episode
MESSAGES_PER_UAV = {
    SchemeKind.CRL: 1,    # policy download from the BS
    SchemeKind.CO: 4,     # action upload, AoI broadcast, sync, peer-action relay
    SchemeKind.PCO: 3,    # action upload, AoI broadcast, sync
    SchemeKind.DMARL: 2,  # position report, sync beacon
    SchemeKind.RW: 1,
}


def count_messages(scheme: SchemeKind, num_uavs: int) -> int:
    if num_uavs < 1:
        raise ValueError("num_uavs must be >= 1")
    return num_uavs * MESSAGES_PER_UAV[SchemeKind(scheme)]


def count_macs(layer_sizes: Sequence[Sequence[int]], forward_samples: int,
               backward_samples: int = 0) -> int:
    """Multiply-accumulates for ``forward_samples`` single-input forward passes
    and ``backward_samples`` backward passes through every listed network."""
    per_net = sum(sum(a * b for a, b in zip(s[:-1], s[1:])) for s in layer_sizes)
    return per_net * (forward_samples + 2 * backward_samples)


@dataclass
class AccountingCounters:
    messages: int = 0
    mac_ops: int = 0
    wall_time: float = 0.0
    episodes: int = 0

    def copy(self) -> "AccountingCounters":
        return AccountingCounters(**asdict(self))


@dataclass
class EpisodeLog:
    frames: list
    returns: np.ndarray
    age_trace: np.ndarray
    power_trace: np.ndarray
    actions: list
    counters: AccountingCounters
    epsilon: float = 0.0

    @property
    def mean_weighted_age(self) -> float:
        return float(np.mean(self.age_trace))

    @property
    def mean_power(self) -> float:
        return float(np.mean(self.power_trace))


def learner_seed(seed: int, index: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(entropy=seed, spawn_key=(index,))


def make_learners(scheme: SchemeKind, scenario: Scenario, config: TrainConfig, seed: int,
                  action_cap: Optional[int] = DEFAULT_ACTION_CAP) -> list[DqnAgent]:
    """One joint learner for C-RL, one per UAV for the MARL schemes, none for RW."""
    scheme = SchemeKind(scheme)
    U, A = scenario.num_uavs, scenario.num_actions
    if scheme is SchemeKind.RW:
        return []
    if scheme is SchemeKind.CRL:
        size = action_space_size(scenario.num_clusters, U, cap=action_cap)
        return [DqnAgent(state_width(scenario, joint=True), size, config, learner_seed(seed, 0))]
    action_space_size(scenario.num_clusters, 1, cap=action_cap)
    return [DqnAgent(state_width(scenario, num_peers=u if scheme is SchemeKind.CO else 0), A,
                     config, learner_seed(seed, u))
            for u in range(U)]


class _Observer:
    """Scheme-specific observation builder for one episode."""

    def __init__(self, scheme: SchemeKind, scenario: Scenario):
        self.scheme = scheme
        self.scenario = scenario
        init = scenario.initial_aoi()
        # D-MARL: what each UAV believes, updated only by its own polls
        self.beliefs = [init] * scenario.num_uavs

    def agent(self, u: int, cells, aoi, peers: Sequence[int] = ()) -> np.ndarray:
        if self.scheme is SchemeKind.DMARL:
            ages = self.beliefs[u].ages
        else:
            ages = aoi.ages
        peer = tuple(peers) if self.scheme is SchemeKind.CO else None
        return encode_state(AgentState(cells[u], ages, peer), self.scenario)

    def joint(self, cells, aoi) -> np.ndarray:
        return encode_joint_state(cells, aoi.ages, self.scenario)

    def after_step(self, joint_action: Sequence[AgentAction]):
        if self.scheme is not SchemeKind.DMARL:
            return
        sc = self.scenario
        for u, a in enumerate(joint_action):
            own = np.zeros(sc.num_devices, dtype=bool)
            own[sc.cluster_index[a.cluster]] = True
            self.beliefs[u] = aoi_mod.update_aoi(self.beliefs[u], own)


def run_episode(scheme: SchemeKind, learners: Sequence[DqnAgent], scenario: Scenario,
                epsilon: float, counters: Optional[AccountingCounters] = None, *,
                rw_rngs: Optional[Sequence[np.random.Generator]] = None, learn: bool = True,
                record: bool = False, scripted: Optional[Sequence[Sequence[AgentAction]]] = None,
                observations: Optional[list] = None) -> EpisodeLog:
    """Play one episode of ``scenario.horizon`` frames under ``scheme``.

    ``scripted`` forces the joint action of every frame (learners still
    observe but neither act nor learn).  ``observations``, if a list, receives
    the per-UAV encoded observations of every frame.
    """
    scheme = SchemeKind(scheme)
    sc = scenario
    U, A, T = sc.num_uavs, sc.num_actions, sc.horizon
    expected = 0 if scheme is SchemeKind.RW else (1 if scheme is SchemeKind.CRL else U)
    if len(learners) != expected:
        raise ValueError(f"{scheme.value} needs {expected} learners, got {len(learners)}")
    if scheme is SchemeKind.RW and scripted is None and (rw_rngs is None or len(rw_rngs) != U):
        raise ValueError("RW needs one generator per UAV")
    if scripted is not None and len(scripted) < T:
        raise ValueError(f"scripted actions cover {len(scripted)} of {T} frames")
    learn = learn and scripted is None
    tic = time.perf_counter()
    macs0 = sum(l.macs for l in learners)

    obs = _Observer(scheme, sc)
    cells = sc.start_cells()
    aoi = sc.initial_aoi()
    pending: list = [None] * len(learners)
    returns = np.zeros(U)
    age_trace, power_trace, frames, actions = np.zeros(T), np.zeros(T), [], []
    train_every = learners[0].config.train_every if learners else 1

    for t in range(T):
        frame_obs = []
        if scheme is SchemeKind.CRL:
            s = obs.joint(cells, aoi)
            frame_obs.append(s)
            agent = learners[0]
            if pending[0] is not None and learn:
                agent.remember(*pending[0], s, False)
            if scripted is None:
                a = agent.act(s, joint_action_mask(cells, sc.world, sc.num_clusters), epsilon)
                joint = decode_joint_action(a, A, U)
            else:
                joint = list(scripted[t])
                a = None
            chosen = [a]
        else:
            joint, chosen = [], []
            for u in range(U):
                mask = np.tile(direction_mask(cells[u], sc.world), sc.num_clusters)
                if scheme is SchemeKind.RW:
                    valid = np.flatnonzero(mask)
                    a = (scripted[t][u].index if scripted is not None
                         else int(valid[rw_rngs[u].integers(valid.size)]))
                    frame_obs.append(None)
                else:
                    s = obs.agent(u, cells, aoi, [c for c in chosen])
                    frame_obs.append(s)
                    if pending[u] is not None and learn:
                        learners[u].remember(*pending[u], s, False)
                    a = (scripted[t][u].index if scripted is not None
                         else learners[u].act(s, mask, epsilon))
                chosen.append(a)
                joint.append(AgentAction.from_index(a))

        res = env_step(cells, joint, aoi, sc, frame=t)
        obs.after_step(joint)
        if scheme is SchemeKind.CRL:
            reward = -res.record["weighted_age"] - (
                sc.reward.power_penalty / sc.capacity * float(res.uav_power.sum()))
            pending[0] = (frame_obs[0], chosen[0], reward)
        elif scheme is not SchemeKind.RW:
            for u in range(U):
                pending[u] = (frame_obs[u], chosen[u], float(res.rewards[u]))
        cells, aoi = res.positions, res.aoi
        returns += res.rewards
        age_trace[t] = res.record["weighted_age"]
        power_trace[t] = res.record["total_power"]
        actions.append(joint)
        if observations is not None:
            observations.append(frame_obs)
        if record:
            frames.append(res.record)
        if learn and (t + 1) % train_every == 0:
            for agent in learners:
                agent.learn()

    if learn:
        # terminal transitions: no bootstrap, peer blocks unknown
        for i, agent in enumerate(learners):
            if pending[i] is None:
                continue
            if scheme is SchemeKind.CRL:
                s = obs.joint(cells, aoi)
            else:
                s = obs.agent(i, cells, aoi, [-1] * i)
            agent.remember(*pending[i], s, True)

    delta = AccountingCounters(messages=count_messages(scheme, U),
                               mac_ops=sum(l.macs for l in learners) - macs0,
                               wall_time=time.perf_counter() - tic, episodes=1)
    if counters is not None:
        counters.messages += delta.messages
        counters.mac_ops += delta.mac_ops
        counters.wall_time += delta.wall_time
        counters.episodes += 1
    return EpisodeLog(frames=frames, returns=returns, age_trace=age_trace,
                      power_trace=power_trace, actions=actions, counters=delta,
                      epsilon=epsilon)


CHECKPOINT_FORMAT = "swarm-aoi-checkpoint"
CHECKPOINT_VERSION = 1


class Trainer:
    """Episode loop for one (scheme, scenario, seed): ε annealing, logging,
    checkpointing."""

    def __init__(self, scheme: SchemeKind, scenario: Scenario, config: TrainConfig, seed: int,
                 action_cap: Optional[int] = DEFAULT_ACTION_CAP):
        self.scheme = SchemeKind(scheme)
        self.scenario = scenario
        self.config = config
        self.seed = seed
        self.learners = make_learners(self.scheme, scenario, config, seed, action_cap)
        self.rw_rngs = [np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(u, 1)))
                        for u in range(scenario.num_uavs)]
        self.episode = 0
        self.counters = AccountingCounters()
        self.episode_ages: list[float] = []
        self.episode_powers: list[float] = []
        self.episode_returns: list[list[float]] = []
        self.episode_macs: list[int] = []

    def run(self, episodes: Optional[int] = None, record_last: bool = False) -> Optional[EpisodeLog]:
        """Run ``episodes`` more episodes (default: up to the configured budget)."""
        if episodes is None:
            episodes = self.config.episodes - self.episode
        log = None
        for k in range(episodes):
            eps = linear_epsilon(self.episode, self.config)
            log = run_episode(self.scheme, self.learners, self.scenario, eps, self.counters,
                              rw_rngs=self.rw_rngs, record=record_last and k == episodes - 1)
            self.episode += 1
            self.episode_ages.append(log.mean_weighted_age)
            self.episode_powers.append(log.mean_power)
            self.episode_returns.append(log.returns.tolist())
            self.episode_macs.append(log.counters.mac_ops)
        return log

    def evaluation(self, fraction: float = 0.1) -> tuple[float, float]:
        """Mean weighted age and mean total power over the trailing
        ``fraction`` of training episodes."""
        n = max(1, int(round(fraction * len(self.episode_ages))))
        return float(np.mean(self.episode_ages[-n:])), float(np.mean(self.episode_powers[-n:]))

    def learning_curve(self, windows: int = 50) -> list[tuple[int, float]]:
        ages = self.episode_ages
        width = max(1, len(ages) // windows)
        return [(min(i + width, len(ages)), float(np.mean(ages[i:i + width])))
                for i in range(0, len(ages), width)]

    def greedy_episode(self, record: bool = True) -> EpisodeLog:
        """One ε = 0 episode without learning (RW stays random)."""
        return run_episode(self.scheme, self.learners, self.scenario, 0.0, None,
                           rw_rngs=self.rw_rngs, learn=False, record=record)

    # checkpoints ---------------------------------------------------------
    def save(self, path) -> None:
        """Write an ``.npz`` holding every array plus a JSON ``meta`` record."""
        arrays = {}
        for i, agent in enumerate(self.learners):
            for k, v in agent.state_dict().items():
                arrays[f"learner{i}.{k}"] = v
        meta = {
            "format": CHECKPOINT_FORMAT, "version": CHECKPOINT_VERSION,
            "scheme": self.scheme.value, "seed": self.seed, "episode": self.episode,
            "epsilon": linear_epsilon(self.episode, self.config),
            "counters": asdict(self.counters),
            "episode_ages": self.episode_ages, "episode_powers": self.episode_powers,
            "episode_returns": self.episode_returns, "episode_macs": self.episode_macs,
            "learners": [a.meta() for a in self.learners],
            "rw_rngs": [r.bit_generator.state for r in self.rw_rngs],
        }
        arrays["meta"] = np.frombuffer(json.dumps(meta).encode(), dtype=np.uint8)
        with open(path, "wb") as fh:
            np.savez(fh, **arrays)

    def load(self, path) -> "Trainer":
        with np.load(path) as data:
            meta = json.loads(bytes(data["meta"]).decode())
            if meta.get("format") != CHECKPOINT_FORMAT or meta.get("version") != CHECKPOINT_VERSION:
                raise ValueError(f"{path}: not a v{CHECKPOINT_VERSION} {CHECKPOINT_FORMAT} file")
            if meta["scheme"] != self.scheme.value:
                raise ValueError(f"checkpoint is for {meta['scheme']}, trainer is {self.scheme.value}")
            for i, agent in enumerate(self.learners):
                prefix = f"learner{i}."
                agent.load(meta["learners"][i],
                           {k[len(prefix):]: data[k] for k in data.files if k.startswith(prefix)})
        self.episode = meta["episode"]
        self.counters = AccountingCounters(**meta["counters"])
        self.episode_ages = meta["episode_ages"]
        self.episode_powers = meta["episode_powers"]
        self.episode_returns = meta["episode_returns"]
        self.episode_macs = meta["episode_macs"]
        for r, st in zip(self.rw_rngs, meta["rw_rngs"]):
            r.bit_generator.state = st
        return self


@dataclass
class TrainResult:
    scheme: SchemeKind
    mean_age: float
    mean_power: float
    curve: list
    counters: AccountingCounters
    trainer: Trainer = field(repr=False)
    final_log: Optional[EpisodeLog] = field(default=None, repr=False)

    @property
    def learners(self) -> list[DqnAgent]:
        return self.trainer.learners


def train(scheme: SchemeKind, config: TrainConfig, scenario: Scenario, seed: int = 0,
          eval_fraction: float = 0.1, action_cap: Optional[int] = DEFAULT_ACTION_CAP,
          record_last: bool = False) -> TrainResult:
    trainer = Trainer(scheme, scenario, config, seed, action_cap)
    log = trainer.run(record_last=record_last)
    age, power = trainer.evaluation(eval_fraction)
    return TrainResult(trainer.scheme, age, power, trainer.learning_curve(),
                       trainer.counters.copy(), trainer, log)
