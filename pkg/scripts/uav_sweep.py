"""Average age vs. number of UAVs, full duplex (desk scale).

    python scripts/uav_sweep.py --out results/uav_sweep [--seeds 0-4] [--jobs 2]

Writes results.csv and plots/age_vs_uavs_<scheme>_full_<rate>Mbps.dat.
"""
import argparse
from pathlib import Path

from swarm_aoi import cli
from swarm_aoi.config import config_from_dict


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=Path("results/uav_sweep"))
    ap.add_argument("--seeds", type=cli._seed_list, default=[0, 1, 2, 3, 4])
    ap.add_argument("--max-uavs", type=int, default=4)
    ap.add_argument("--rate", type=float, default=12.5e6)
    ap.add_argument("--episodes", type=int, default=None)
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args()
    overrides = {"sweep": {"tx_rates": [args.rate],
                           "uav_counts": list(range(1, args.max_uavs + 1)),
                           "duplex": ["full"]}}
    if args.episodes:
        overrides["train"] = {"episodes": args.episodes}
    cfg = config_from_dict(overrides, profile="desk")
    rows = cli.run_matrix(cfg, args.out, args.seeds, args.jobs)
    print(cli.format_summary(cli.summarize(rows), [r for r in rows if not r.ok]))


if __name__ == "__main__":
    main()
