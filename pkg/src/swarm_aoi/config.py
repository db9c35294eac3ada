"""Run configuration: YAML in, validated dataclasses out.

Unspecified keys take the reference-setup values; unknown
keys are rejected with their full dotted path.
"""
from __future__ import annotations

import dataclasses
import itertools
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Any, Optional, Union

import yaml

from .channel import CapacityError, Duplex, LinkBudget, RateConfig, cluster_capacity, nav_time
from .dqn import TrainConfig
from .mdp import DEFAULT_ACTION_CAP, Scenario, build_scenario
from .schemes import SchemeKind
from .world import UavConfig, WorldConfig, WorldConfigError, build_world


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class WorldSection:
    grid_cells_x: int = 11
    grid_cells_y: int = 11
    cell_size: float = 100.0
    bs_height: float = 15.0
    bs_cell: Optional[tuple] = None
    restricted_cells: tuple = ()
    # None -> navigation time L_c / v_u
    frame_duration: Optional[float] = None
    num_devices: int = 300
    device_seed: int = 0


@dataclass(frozen=True)
class ChannelSection:
    beta0_db: float = 30.0
    noise_dbm: float = -100.0
    bandwidth_hz: float = 1e6
    packet_bits: float = 5e6

    def budget(self) -> LinkBudget:
        return LinkBudget.from_db(self.beta0_db, self.noise_dbm, self.bandwidth_hz,
                                  self.packet_bits)


@dataclass(frozen=True)
class UavSection:
    height: float = 100.0
    velocity: float = 25.0
    start_cells: Optional[tuple] = None


@dataclass(frozen=True)
class RewardSection:
    power_penalty: float = 5.0
    max_age: int = 30
    initial_age: int = 1
    horizon: int = 60
    age_encoding: str = "cluster"


@dataclass(frozen=True)
class SweepSection:
    tx_rates: tuple = (31.25e6,)
    uav_counts: tuple = (10,)
    duplex: tuple = ("full",)
    schemes: tuple = tuple(s.value for s in SchemeKind)
    seeds: tuple = (0,)


@dataclass(frozen=True)
class RunConfig:
    world: WorldSection = WorldSection()
    channel: ChannelSection = ChannelSection()
    uav: UavSection = UavSection()
    reward: RewardSection = RewardSection()
    train: TrainConfig = TrainConfig()
    sweep: tuple = (SweepSection(),)
    output_dir: str = "results"
    eval_fraction: float = 0.1
    crl_action_cap: Optional[int] = DEFAULT_ACTION_CAP
    # run C-RL even when its joint action space exceeds the cap
    allow_large_crl: bool = False
    record_frames: bool = True


@dataclass(frozen=True)
class SweepPoint:
    scheme: SchemeKind
    duplex: Duplex
    tx_rate: float
    num_uavs: int
    seed: int

    @property
    def key(self) -> tuple:
        return (self.scheme.value, self.duplex.value, self.tx_rate, self.num_uavs, self.seed)

    @property
    def slug(self) -> str:
        return (f"{self.scheme.value}_{self.duplex.value}_{self.tx_rate / 1e6:g}Mbps_"
                f"U{self.num_uavs}_seed{self.seed}")


_TUPLE_FIELDS = {"restricted_cells", "start_cells", "bs_cell", "hidden", "tx_rates",
                 "uav_counts", "duplex", "schemes", "seeds"}


def _to_tuple(v):
    if isinstance(v, (list, tuple)):
        return tuple(_to_tuple(x) for x in v)
    return v


def _build(cls, data: Any, path: str):
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path or 'config'}: expected a mapping, got {type(data).__name__}")
    fields = {f.name: f for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, value in data.items():
        where = f"{path}.{key}" if path else str(key)
        if key not in fields:
            raise ConfigError(f"unknown key {where!r}")
        default = getattr(cls(), key) if key != "sweep" else None
        if key == "sweep":
            blocks = value if isinstance(value, list) else [value]
            kwargs[key] = tuple(_build(SweepSection, b, f"{where}[{i}]")
                                for i, b in enumerate(blocks))
        elif dataclasses.is_dataclass(default):
            kwargs[key] = _build(type(default), value, where)
        elif key in _TUPLE_FIELDS and value is not None:
            if key in ("tx_rates", "uav_counts", "duplex", "schemes", "seeds") and not isinstance(
                    value, (list, tuple)):
                value = [value]
            kwargs[key] = _to_tuple(value)
        else:
            kwargs[key] = value
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path or 'config'}: {exc}") from exc


def _merge(base: dict, over: dict) -> dict:
    out = dict(base)
    for k, v in (over or {}).items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


def load_profile(name: str) -> dict:
    try:
        text = resources.files("swarm_aoi.profiles").joinpath(f"{name}.yaml").read_text()
    except FileNotFoundError:
        raise ConfigError(f"unknown profile {name!r}") from None
    return yaml.safe_load(text) or {}


def config_from_dict(data: Optional[dict], profile: Optional[str] = None) -> RunConfig:
    raw = load_profile(profile) if profile else {}
    cfg = _build(RunConfig, _merge(raw, data or {}), "")
    validate(cfg)
    return cfg


def parse_config(path: Union[str, Path, None], profile: Optional[str] = None) -> RunConfig:
    """Read a YAML run configuration (optionally layered over a profile)."""
    data = {}
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        try:
            data = yaml.safe_load(path.read_text()) or {}
        except yaml.YAMLError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
    return config_from_dict(data, profile)


def sweep_points(cfg: RunConfig, seeds: Optional[list[int]] = None) -> list[SweepPoint]:
    """Union of every sweep block's cartesian product, first occurrence order."""
    seen, points = set(), []
    for block in cfg.sweep:
        for scheme, duplex, rate, u, seed in itertools.product(
                block.schemes, block.duplex, block.tx_rates, block.uav_counts,
                seeds if seeds is not None else block.seeds):
            p = SweepPoint(SchemeKind(scheme), Duplex(duplex), float(rate), int(u), int(seed))
            if p.key not in seen:
                seen.add(p.key)
                points.append(p)
    return points


def world_config(cfg: RunConfig) -> WorldConfig:
    w = cfg.world
    frame = w.frame_duration if w.frame_duration is not None else nav_time(w.cell_size,
                                                                          cfg.uav.velocity)
    return WorldConfig(grid_cells_x=w.grid_cells_x, grid_cells_y=w.grid_cells_y,
                       cell_size=w.cell_size, bs_height=w.bs_height,
                       restricted_cells=frozenset(tuple(c) for c in w.restricted_cells),
                       frame_duration=frame, rng_seed=w.device_seed, bs_cell=w.bs_cell)


def scenario_for(cfg: RunConfig, point: SweepPoint) -> Scenario:
    uav = UavConfig(count=point.num_uavs, height=cfg.uav.height, velocity=cfg.uav.velocity,
                    duplex=point.duplex, start_cells=cfg.uav.start_cells)
    r = cfg.reward
    return build_scenario(world_config(cfg), cfg.world.num_devices, cfg.channel.budget(),
                          RateConfig(point.tx_rate, point.duplex), uav,
                          power_penalty=r.power_penalty, max_age=r.max_age,
                          initial_age=r.initial_age, horizon=r.horizon,
                          age_encoding=r.age_encoding)


def validate(cfg: RunConfig) -> None:
    """Check every sweep point yields a physically consistent configuration."""
    try:
        build_world(world_config(cfg))
    except WorldConfigError as exc:
        raise ConfigError(f"world: {exc}") from exc
    if cfg.world.num_devices < 1:
        raise ConfigError("world.num_devices must be >= 1")
    if not 0 < cfg.eval_fraction <= 1:
        raise ConfigError("eval_fraction must lie in (0, 1]")
    r = cfg.reward
    if r.horizon < 1 or not 1 <= r.initial_age <= r.max_age:
        raise ConfigError("reward: need horizon >= 1 and 1 <= initial_age <= max_age")
    if r.age_encoding not in ("cluster", "device"):
        raise ConfigError(f"reward.age_encoding: unknown value {r.age_encoding!r}")
    for i, block in enumerate(cfg.sweep):
        if not block.seeds:
            raise ConfigError(f"sweep[{i}].seeds must be nonempty")
        for u in block.uav_counts:
            if int(u) < 1:
                raise ConfigError(f"sweep[{i}].uav_counts: {u} < 1")
        for s in block.schemes:
            try:
                SchemeKind(s)
            except ValueError:
                raise ConfigError(f"sweep[{i}].schemes: unknown scheme {s!r}") from None
        for d in block.duplex:
            try:
                duplex = Duplex(d)
            except ValueError:
                raise ConfigError(f"sweep[{i}].duplex: unknown mode {d!r}") from None
            for rate in block.tx_rates:
                try:
                    cluster_capacity(RateConfig(float(rate), duplex), cfg.world.cell_size,
                                     cfg.uav.velocity, cfg.channel.packet_bits)
                except (CapacityError, ValueError) as exc:
                    raise ConfigError(f"sweep[{i}]: {exc}") from exc
    try:
        cfg.channel.budget()
    except ValueError as exc:
        raise ConfigError(f"channel: {exc}") from exc
