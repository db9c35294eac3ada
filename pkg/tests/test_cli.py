import math

import numpy as np
import pytest
import yaml

from swarm_aoi import cli
from swarm_aoi.config import (ConfigError, RunConfig, config_from_dict, parse_config,
                              scenario_for, sweep_points)
from swarm_aoi.schemes import SchemeKind, count_messages

SMALL = {
    "world": {"grid_cells_x": 5, "grid_cells_y": 5, "num_devices": 8},
    "train": {"episodes": 3, "hidden": [8, 8], "batch_size": 8, "replay_capacity": 200},
    "reward": {"horizon": 6},
}


def small(**sweep):
    return config_from_dict({**SMALL, "sweep": sweep})


def write_yaml(tmp_path, data, name="cfg.yaml"):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(data))
    return path


def test_empty_file_gives_reference_defaults(tmp_path):
    path = tmp_path / "empty.yaml"
    path.write_text("")
    cfg = parse_config(path)
    budget = cfg.channel.budget()
    assert budget.beta0 == pytest.approx(1e3)
    assert budget.noise_power == pytest.approx(1e-13)
    assert budget.bandwidth == 1e6 and budget.packet_size == 5e6
    assert (cfg.uav.height, cfg.world.bs_height, cfg.uav.velocity) == (100.0, 15.0, 25.0)
    assert cfg.world.cell_size == 100.0
    assert (cfg.reward.max_age, cfg.reward.power_penalty, cfg.reward.horizon) == (30, 5.0, 60)
    assert (cfg.train.learning_rate, cfg.train.discount) == (1e-4, 0.99)
    assert cfg == RunConfig()


def test_missing_file():
    with pytest.raises(ConfigError, match="not found"):
        parse_config("/nonexistent/run.yaml")


def test_unknown_keys_are_rejected_with_path(tmp_path):
    with pytest.raises(ConfigError, match="'foo'"):
        parse_config(write_yaml(tmp_path, {"foo": 1}))
    with pytest.raises(ConfigError, match="'train.foo'"):
        parse_config(write_yaml(tmp_path, {"train": {"foo": 1}}))
    with pytest.raises(ConfigError, match=r"sweep\[1\].bar"):
        config_from_dict({"sweep": [{}, {"bar": 2}]})


def test_capacity_below_one_names_the_bound():
    with pytest.raises(ConfigError, match=r"R_T\*L_c/\(M\*v_u\)"):
        config_from_dict({"sweep": {"tx_rates": [1e6], "duplex": ["full"]}})
    # 2 Mbps: fine in full duplex (1 device), too slow in half duplex
    config_from_dict({"sweep": {"tx_rates": [2e6], "duplex": ["full"]}})
    with pytest.raises(ConfigError):
        config_from_dict({"sweep": {"tx_rates": [2e6], "duplex": ["half"]}})


@pytest.mark.parametrize("bad", [
    {"sweep": {"schemes": ["Q-MARL"]}},
    {"sweep": {"duplex": ["simplex"]}},
    {"sweep": {"seeds": []}},
    {"sweep": {"uav_counts": [0]}},
    {"world": {"restricted_cells": [[5, 5]]}},
    {"world": {"num_devices": 0}},
    {"train": {"discount": 1.5}},
    {"eval_fraction": 0.0},
    {"reward": {"age_encoding": "both"}},
])
def test_schema_violations(bad):
    with pytest.raises(ConfigError):
        config_from_dict(bad)


def test_profiles_validate():
    desk = config_from_dict({}, profile="desk")
    assert desk.world.num_devices == 40
    assert {p.num_uavs for p in sweep_points(desk)} == {1, 2, 3}
    paper = config_from_dict({}, profile="paper")
    assert paper.world.num_devices == 300 and len(paper.sweep) == 2
    with pytest.raises(ConfigError):
        config_from_dict({}, profile="laptop")


def test_sweep_blocks_union_without_duplicates():
    cfg = config_from_dict({"sweep": [
        {"tx_rates": [25e6], "uav_counts": [1, 2], "schemes": ["RW"]},
        {"tx_rates": [25e6], "uav_counts": [2, 3], "schemes": ["RW"]}]})
    assert [p.num_uavs for p in sweep_points(cfg)] == [1, 2, 3]
    assert len(sweep_points(cfg, seeds=[0, 1, 2])) == 9


def test_scenario_for_point():
    cfg = small(tx_rates=[5e6], schemes=["RW"])
    (p,) = sweep_points(cfg)
    sc = scenario_for(cfg, p)
    assert sc.capacity == 4 and sc.num_devices == 8 and sc.num_clusters == 2


def test_matrix_row_count(tmp_path):
    cfg = small(tx_rates=[20e6, 25e6, 30e6], duplex=["half", "full"], schemes=["RW"],
                uav_counts=[2], seeds=[0, 1])
    rows = cli.run_matrix(cfg, tmp_path)
    assert len(rows) == 12
    assert all(r.ok and r.mean_age >= 1 for r in rows)
    assert len(cli.read_rows(tmp_path / cli.RESULTS_FILE)) == 12


def _without_wall_time(path):
    lines = path.read_text().splitlines()
    col = lines[0].split(",").index("wall_time")
    return [",".join(v for i, v in enumerate(line.split(",")) if i != col) for line in lines]


def test_matrix_is_deterministic(tmp_path):
    cfg = small(tx_rates=[5e6], schemes=["Co-MARL", "D-MARL", "RW"], uav_counts=[2], seeds=[3])
    a = cli.run_matrix(cfg, tmp_path / "a")
    b = cli.run_matrix(cfg, tmp_path / "b")
    assert _without_wall_time(tmp_path / "a" / cli.RESULTS_FILE) == \
        _without_wall_time(tmp_path / "b" / cli.RESULTS_FILE)
    for x, y in zip(a, b):
        assert (x.mean_age, x.mac_ops) == (y.mean_age, y.mac_ops)
    for sub in ("curves", "frames"):
        for f in sorted((tmp_path / "a" / sub).iterdir()):
            assert f.read_text() == (tmp_path / "b" / sub / f.name).read_text()


def test_parallel_jobs_match_serial(tmp_path):
    cfg = small(tx_rates=[5e6], schemes=["PCo-MARL", "RW"], uav_counts=[1, 2], seeds=[0])
    serial = cli.run_matrix(cfg)
    parallel = cli.run_matrix(cfg, jobs=2)
    assert [(r.scheme, r.num_uavs, r.mean_age) for r in serial] == \
        [(r.scheme, r.num_uavs, r.mean_age) for r in parallel]


def test_rows_round_trip(tmp_path):
    cfg = small(tx_rates=[5e6], schemes=["PCo-MARL"], uav_counts=[1], seeds=[0, 1])
    rows = cli.run_matrix(cfg)
    cli.write_rows(rows, tmp_path / "r.csv")
    assert cli.read_rows(tmp_path / "r.csv") == rows


def test_errors_are_recorded_and_matrix_continues(tmp_path):
    data = {**SMALL, "crl_action_cap": 50,
            "sweep": {"tx_rates": [5e6], "schemes": ["C-RL", "RW"], "uav_counts": [2]}}
    rows = cli.run_matrix(config_from_dict(data), tmp_path)
    crl, rw = rows
    assert "DimensionalityError" in crl.error and math.isnan(crl.mean_age)
    assert rw.ok
    back = cli.read_rows(tmp_path / cli.RESULTS_FILE)
    assert back[0].error == crl.error and math.isnan(back[0].mean_age)
    # the override flag lifts the refusal
    rows = cli.run_matrix(config_from_dict({**data, "allow_large_crl": True}))
    assert rows[0].ok


def test_artifacts_written(tmp_path):
    cfg = small(tx_rates=[5e6], schemes=["Co-MARL"], uav_counts=[1, 2], seeds=[0])
    cli.run_matrix(cfg, tmp_path)
    curve = cli.read_jsonl(tmp_path / "curves" / "Co-MARL_full_5Mbps_U2_seed0.jsonl")
    assert [r["episode"] for r in curve] == [0, 1, 2]
    frames = cli.read_jsonl(tmp_path / "frames" / "Co-MARL_full_5Mbps_U2_seed0.jsonl")
    assert len(frames) == 6 and len(frames[0]["cells"]) == 2
    series = np.loadtxt(tmp_path / "plots" / "age_vs_uavs_Co-MARL_full_5Mbps.dat")
    assert series[:, 0].tolist() == [1.0, 2.0]


def row(scheme="Co-MARL", seed=0, age=2.0, u=3, **kw):
    base = dict(scheme=scheme, duplex="full", tx_rate=25e6, num_uavs=u, num_devices=40,
                num_clusters=4, seed=seed, mean_age=age, mean_power=1e-11,
                messages=float(count_messages(SchemeKind(scheme), u)),
                mac_ops=1000.0, wall_time=0.01, episodes=10)
    base.update(kw)
    return cli.ResultRow(**base)


def test_summarize_singleton():
    (s,) = cli.summarize([row(messages=12.0)])
    assert (s.mean_age, s.age_std, s.messages, s.mac_ops, s.seeds) == (2.0, 0.0, 12.0, 1000.0, 1)


def test_summarize_mean_over_seeds():
    rows = [row(seed=i, age=a, mac_ops=m) for i, (a, m) in enumerate([(1.5, 10.0), (2.5, 30.0),
                                                                      (2.0, 20.0)])]
    (s,) = cli.summarize(rows)
    assert s.mean_age == pytest.approx(2.0) and s.mac_ops == pytest.approx(20.0)
    assert s.age_std == pytest.approx(np.std([1.5, 2.5, 2.0], ddof=1))
    with pytest.raises(ValueError):
        cli.summarize([])


def test_summarize_signalling_column():
    data = {**SMALL, "allow_large_crl": True, "train": {**SMALL["train"], "episodes": 1},
            "sweep": {"tx_rates": [10e6], "schemes": ["C-RL", "Co-MARL", "PCo-MARL",
                                                      "D-MARL"], "uav_counts": [3]}}
    rows = cli.run_matrix(config_from_dict(data))
    summary = cli.summarize(rows)
    assert [s.messages for s in summary] == [3, 12, 9, 6]
    assert "Co-MARL" in cli.format_summary(summary)


def test_plot_series_age_vs_uavs():
    rows = [row(scheme=s, u=u, seed=k, age=3.0 / u + k) for s in ("Co-MARL", "RW")
            for u in (1, 2, 3) for k in (0, 1)]
    series = cli.plot_series(rows)
    for s in ("Co-MARL", "RW"):
        xy = series[f"age_vs_uavs_{s}_full_25Mbps"]
        assert [x for x, _ in xy] == [1.0, 2.0, 3.0]
        assert [y for _, y in xy] == pytest.approx([3.5, 2.0, 1.5])


def test_seed_list_parsing():
    assert cli._seed_list("0,2-4") == [0, 2, 3, 4]


def test_main_verbs(tmp_path, capsys):
    path = write_yaml(tmp_path, {**SMALL, "sweep": {"tx_rates": [5e6], "schemes": ["RW"],
                                                    "uav_counts": [1]}})
    assert cli.main(["validate", "--config", str(path)]) == 0
    assert "ok: 1 runs" in capsys.readouterr().out
    out = tmp_path / "res"
    assert cli.main(["run", "--config", str(path), "--out", str(out), "--seeds", "0-1"]) == 0
    assert len(cli.read_rows(out / cli.RESULTS_FILE)) == 2
    assert cli.main(["summarize", "--out", str(out)]) == 0
    assert "RW" in capsys.readouterr().out
    bad = write_yaml(tmp_path, {"foo": 1}, "bad.yaml")
    assert cli.main(["validate", "--config", str(bad)]) == 2
    assert "foo" in capsys.readouterr().err
