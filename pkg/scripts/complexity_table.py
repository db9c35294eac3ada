"""Per-episode wall time, MAC count and signalling for every scheme at U = 3
(desk world, full duplex).  C-RL runs with the joint-action cap lifted.

    python scripts/complexity_table.py [--episodes 5]
"""
import argparse

from swarm_aoi.config import config_from_dict, scenario_for, sweep_points
from swarm_aoi.schemes import SchemeKind, Trainer


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--episodes", type=int, default=5)
    ap.add_argument("--rate", type=float, default=12.5e6)
    args = ap.parse_args()
    cfg = config_from_dict({"sweep": {"tx_rates": [args.rate], "uav_counts": [3],
                                      "duplex": ["full"], "schemes": ["Co-MARL"]}},
                           profile="desk")
    (point,) = sweep_points(cfg, seeds=[0])
    sc = scenario_for(cfg, point)
    print(f"U=3, C={sc.num_clusters}, {args.episodes} episodes each")
    print(f"{'scheme':<9} {'ms/episode':>10} {'MACs/episode':>13} {'messages':>9}")
    for scheme in SchemeKind:
        tr = Trainer(scheme, sc, cfg.train, seed=0, action_cap=None)
        tr.run(args.episodes)
        c, n = tr.counters, tr.episode
        print(f"{scheme.value:<9} {1e3 * c.wall_time / n:>10.2f} {c.mac_ops / n:>13.3e} "
              f"{c.messages // n:>9d}")


if __name__ == "__main__":
    main()
