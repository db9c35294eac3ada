"""Experiment matrix runner and command-line entry point.

    python -m swarm_aoi run --profile desk --out results/
    python -m swarm_aoi summarize --out results/
    python -m swarm_aoi oracle
    python -m swarm_aoi validate --config my.yaml
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import math
import multiprocessing
import sys
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .channel import CapacityError, Duplex, LinkBudget, RateConfig
from .config import (ConfigError, RunConfig, SweepPoint, parse_config, scenario_for,
                     sweep_points)
from .dqn import (TabularConfig, TrainConfig, finite_horizon_dp, greedy_return,
                  tabular_q_learning)
from .mdp import DimensionalityError, SwarmMDP, build_scenario
from .schemes import SchemeKind, Trainer
from .world import UavConfig, WorldConfig

log = logging.getLogger("swarm_aoi")

RESULTS_FILE = "results.csv"


@dataclass(frozen=True)
class ResultRow:
    scheme: str
    duplex: str
    tx_rate: float
    num_uavs: int
    num_devices: int
    num_clusters: int
    seed: int
    mean_age: float
    mean_power: float
    # per-episode averages over the whole run
    messages: float
    mac_ops: float
    wall_time: float
    episodes: int
    error: str = ""

    @property
    def ok(self) -> bool:
        return not self.error


_ROW_FIELDS = [f.name for f in dataclasses.fields(ResultRow)]
_ROW_TYPES = {f.name: f.type for f in dataclasses.fields(ResultRow)}
_CASTS = {"str": str, "float": float, "int": int}


def write_rows(rows: Sequence[ResultRow], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(_ROW_FIELDS)
        for r in rows:
            # repr() of a float round-trips exactly
            w.writerow([repr(v) if isinstance(v, float) else v
                        for v in dataclasses.astuple(r)])


def read_rows(path) -> list[ResultRow]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != _ROW_FIELDS:
            raise ValueError(f"{path}: unexpected header {reader.fieldnames}")
        return [ResultRow(**{k: _CASTS[_ROW_TYPES[k]](v) for k, v in rec.items()})
                for rec in reader]


def _write_jsonl(path: Path, records: Iterable[dict]) -> None:
    with open(path, "w") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def read_jsonl(path) -> list[dict]:
    with open(path) as fh:
        return [json.loads(line) for line in fh if line.strip()]


# --- one sweep point ------------------------------------------------------

def run_point(cfg: RunConfig, point: SweepPoint, out: Optional[Path] = None) -> ResultRow:
    """Train one (scheme, duplex, rate, U, seed) point; errors become a row."""
    base = dict(scheme=point.scheme.value, duplex=point.duplex.value, tx_rate=point.tx_rate,
                num_uavs=point.num_uavs, num_devices=cfg.world.num_devices, seed=point.seed)
    try:
        scenario = scenario_for(cfg, point)
        cap = None if cfg.allow_large_crl else cfg.crl_action_cap
        trainer = Trainer(point.scheme, scenario, cfg.train, point.seed, action_cap=cap)
        last = trainer.run(record_last=cfg.record_frames)
    except (DimensionalityError, CapacityError, ValueError) as exc:
        log.warning("%s: %s", point.slug, exc)
        return ResultRow(**base, num_clusters=0, mean_age=math.nan, mean_power=math.nan,
                         messages=0.0, mac_ops=0.0, wall_time=0.0, episodes=0,
                         error=f"{type(exc).__name__}: {exc}")
    age, power = trainer.evaluation(cfg.eval_fraction)
    c, n = trainer.counters, max(trainer.episode, 1)
    if out is not None:
        _write_jsonl(out / "curves" / f"{point.slug}.jsonl",
                     ({"episode": e, "mean_age": a}
                      for e, a in enumerate(trainer.episode_ages)))
        if last is not None and last.frames:
            _write_jsonl(out / "frames" / f"{point.slug}.jsonl", last.frames)
    return ResultRow(**base, num_clusters=scenario.num_clusters, mean_age=age, mean_power=power,
                     messages=c.messages / n, mac_ops=c.mac_ops / n, wall_time=c.wall_time / n,
                     episodes=trainer.episode)


def _job(args):
    cfg, point, out = args
    return run_point(cfg, point, out)


def run_matrix(cfg: RunConfig, out: Optional[Path] = None, seeds: Optional[list[int]] = None,
               jobs: int = 1) -> list[ResultRow]:
    """Run every sweep point; write rows, curves, frame logs and plot data
    under ``out`` (if given).  Rows come back in sweep order."""
    points = sweep_points(cfg, seeds)
    if out is not None:
        out = Path(out)
        for sub in ("curves", "frames", "plots"):
            (out / sub).mkdir(parents=True, exist_ok=True)
    tasks = [(cfg, p, out) for p in points]
    if jobs > 1 and len(tasks) > 1:
        with multiprocessing.Pool(min(jobs, len(tasks))) as pool:
            rows = pool.map(_job, tasks, chunksize=1)
    else:
        rows = []
        for i, task in enumerate(tasks):
            log.info("[%d/%d] %s", i + 1, len(tasks), task[1].slug)
            rows.append(_job(task))
    if out is not None:
        write_rows(rows, out / RESULTS_FILE)
        write_plot_data(rows, out / "plots")
    return rows


# --- aggregation ------------------------------------------------------------

def _mean_std(values: Sequence[float]) -> tuple[float, float]:
    arr = np.asarray(values, dtype=float)
    return float(arr.mean()), float(arr.std(ddof=1)) if arr.size > 1 else 0.0


def plot_series(rows: Sequence[ResultRow]) -> dict[str, list[tuple[float, float]]]:
    """Seed-averaged two-column series: age vs. tx rate (Mbps) per
    scheme/duplex/U, and age vs. U per scheme/duplex/rate."""
    groups = defaultdict(list)
    for r in rows:
        if r.ok:
            groups[(r.scheme, r.duplex, r.tx_rate, r.num_uavs)].append(r.mean_age)
    by_rate, by_u = defaultdict(list), defaultdict(list)
    for (scheme, duplex, rate, u), ages in sorted(groups.items()):
        mean = float(np.mean(ages))
        by_rate[f"age_vs_rate_{scheme}_{duplex}_U{u}"].append((rate / 1e6, mean))
        by_u[f"age_vs_uavs_{scheme}_{duplex}_{rate / 1e6:g}Mbps"].append((float(u), mean))
    return {**by_rate, **by_u}


def write_plot_data(rows: Sequence[ResultRow], directory: Path) -> None:
    directory.mkdir(parents=True, exist_ok=True)
    for name, series in plot_series(rows).items():
        with open(directory / f"{name}.dat", "w") as fh:
            fh.write(f"# {'tx_rate_mbps' if 'rate' in name else 'num_uavs'} mean_age\n")
            for x, y in sorted(series):
                fh.write(f"{x!r} {y!r}\n")


@dataclass(frozen=True)
class SummaryRow:
    scheme: str
    duplex: str
    tx_rate: float
    num_uavs: int
    seeds: int
    mean_age: float
    age_std: float
    mean_power: float
    messages: float
    mac_ops: float
    mac_ops_std: float
    wall_time: float
    wall_time_std: float


def summarize(rows: Sequence[ResultRow]) -> list[SummaryRow]:
    """Aggregate successful rows over seeds (std is the sample std, 0 for one seed)."""
    if not rows:
        raise ValueError("no rows to summarize")
    groups = defaultdict(list)
    for r in rows:
        if r.ok:
            groups[(r.scheme, r.duplex, r.tx_rate, r.num_uavs)].append(r)
    order = {s.value: i for i, s in enumerate(SchemeKind)}
    out = []
    for key in sorted(groups, key=lambda k: (k[1], k[2], k[3], order.get(k[0], 99))):
        g = groups[key]
        age, age_sd = _mean_std([r.mean_age for r in g])
        macs, macs_sd = _mean_std([r.mac_ops for r in g])
        wall, wall_sd = _mean_std([r.wall_time for r in g])
        out.append(SummaryRow(*key, seeds=len(g), mean_age=age, age_std=age_sd,
                              mean_power=float(np.mean([r.mean_power for r in g])),
                              messages=float(np.mean([r.messages for r in g])),
                              mac_ops=macs, mac_ops_std=macs_sd, wall_time=wall,
                              wall_time_std=wall_sd))
    return out


def format_summary(summary: Sequence[SummaryRow], failed: Sequence[ResultRow] = ()) -> str:
    head = (f"{'scheme':<9} {'duplex':<6} {'rate':>6} {'U':>2} {'n':>2} "
            f"{'age':>7} {'±sd':>6} {'msgs':>5} {'MACs/ep':>10} {'ms/ep':>8}")
    lines = [head, "-" * len(head)]
    for s in summary:
        lines.append(f"{s.scheme:<9} {s.duplex:<6} {s.tx_rate / 1e6:>6g} {s.num_uavs:>2} "
                     f"{s.seeds:>2} {s.mean_age:>7.3f} {s.age_std:>6.3f} {s.messages:>5g} "
                     f"{s.mac_ops:>10.3g} {1e3 * s.wall_time:>8.1f}")
    for r in failed:
        lines.append(f"{r.scheme:<9} {r.duplex:<6} {r.tx_rate / 1e6:>6g} {r.num_uavs:>2} "
                     f"seed {r.seed}: {r.error}")
    return "\n".join(lines)


# --- small-instance oracle suite ---------------------------------------------

def oracle_scenario(horizon: int = 10):
    """3x3 grid, one UAV, four devices in two clusters."""
    return build_scenario(WorldConfig(3, 3), 4, LinkBudget(), RateConfig(2.5e6, Duplex.FULL),
                          UavConfig(count=1), horizon=horizon)


@dataclass(frozen=True)
class OracleReport:
    optimum: float
    tabular_return: float
    dqn_return: float

    @property
    def tabular_gap(self) -> float:
        return abs(self.tabular_return - self.optimum) / abs(self.optimum)

    @property
    def dqn_gap(self) -> float:
        return abs(self.dqn_return - self.optimum) / abs(self.optimum)


ORACLE_DQN = TrainConfig(learning_rate=1e-3, discount=0.99, episodes=300, batch_size=32,
                         target_sync_interval=200)
ORACLE_TABULAR = TabularConfig(learning_rate=1.0, discount=0.99, episodes=20000,
                               time_indexed=True)


def run_oracle_suite(seed: int = 0, dqn: TrainConfig = ORACLE_DQN,
                     tabular: TabularConfig = ORACLE_TABULAR) -> OracleReport:
    """Exact optimum vs. tabular Q-learning vs. DQN on the tiny instance
    (returns are undiscounted sums of the centralised reward)."""
    sc = oracle_scenario()
    mdp = SwarmMDP(sc)
    optimum, _ = finite_horizon_dp(mdp, sc.horizon)
    table = tabular_q_learning(mdp, dataclasses.replace(tabular, seed=seed))
    trainer = Trainer(SchemeKind.CO, sc, dqn, seed)
    trainer.run()
    greedy = trainer.greedy_episode(record=False)
    return OracleReport(optimum, greedy_return(mdp, table), float(greedy.returns.sum()))


# --- command line -------------------------------------------------------------

def _seed_list(text: str) -> list[int]:
    seeds = []
    for part in text.split(","):
        part = part.strip()
        if "-" in part[1:]:
            lo, hi = part.split("-", 1)
            seeds.extend(range(int(lo), int(hi) + 1))
        elif part:
            seeds.append(int(part))
    if not seeds:
        raise argparse.ArgumentTypeError("empty seed list")
    return seeds


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="swarm_aoi", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="verb", required=True)
    for verb, text in [("run", "execute the experiment matrix"),
                       ("summarize", "tables from a results directory"),
                       ("oracle", "small-instance DP / tabular / DQN check"),
                       ("validate", "check a configuration and list its sweep points")]:
        sp = sub.add_parser(verb, help=text)
        sp.add_argument("--out", type=Path, default=None, help="output directory")
        if verb in ("run", "validate"):
            sp.add_argument("--config", type=Path, default=None, help="YAML run configuration")
            sp.add_argument("--profile", choices=["desk", "paper"], default=None,
                            help="built-in profile the config file is layered on")
            sp.add_argument("--seeds", type=_seed_list, default=None,
                            help="override seeds, e.g. 0,1,2 or 0-4")
        if verb == "run":
            sp.add_argument("--jobs", type=int, default=1, help="worker processes")
        if verb == "oracle":
            sp.add_argument("--seeds", type=_seed_list, default=[0])
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(message)s")
    try:
        if args.verb in ("run", "validate"):
            cfg = parse_config(args.config, args.profile)
            points = sweep_points(cfg, args.seeds)
            if args.verb == "validate":
                print(f"ok: {len(points)} runs")
                for p in points:
                    print("  " + p.slug)
                return 0
            out = args.out or Path(cfg.output_dir)
            rows = run_matrix(cfg, out, args.seeds, max(1, args.jobs))
            print(format_summary(summarize(rows) if any(r.ok for r in rows) else [],
                                 [r for r in rows if not r.ok]))
            print(f"\n{len(rows)} rows written to {out / RESULTS_FILE}")
            return 0
        if args.verb == "summarize":
            rows = read_rows((args.out or Path("results")) / RESULTS_FILE)
            print(format_summary(summarize(rows), [r for r in rows if not r.ok]))
            return 0
        if args.verb == "oracle":
            ok = True
            for seed in args.seeds:
                rep = run_oracle_suite(seed)
                good = rep.tabular_gap <= 0.01 and rep.dqn_gap <= 0.05
                ok &= good
                print(f"seed {seed}: optimum {rep.optimum:.6g}  tabular {rep.tabular_return:.6g} "
                      f"(gap {rep.tabular_gap:.2%})  dqn {rep.dqn_return:.6g} "
                      f"(gap {rep.dqn_gap:.2%})  {'PASS' if good else 'FAIL'}")
            return 0 if ok else 1
    except (ConfigError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
