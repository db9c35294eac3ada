"""Average age vs. transmission rate, half and full duplex (desk scale).

    python scripts/rate_sweep.py --out results/rate_sweep [--seeds 0-4] [--jobs 2]

Writes results.csv and plots/age_vs_rate_<scheme>_<duplex>_U3.dat.
"""
import argparse
from pathlib import Path

from swarm_aoi import cli
from swarm_aoi.config import config_from_dict

RATES = [10e6, 12.5e6, 15e6, 20e6, 25e6]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=Path("results/rate_sweep"))
    ap.add_argument("--seeds", type=cli._seed_list, default=[0, 1, 2])
    ap.add_argument("--uavs", type=int, default=3)
    ap.add_argument("--episodes", type=int, default=None)
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args()
    overrides = {"sweep": {"tx_rates": RATES, "uav_counts": [args.uavs],
                           "duplex": ["half", "full"],
                           "schemes": ["Co-MARL", "PCo-MARL", "D-MARL", "RW"]}}
    if args.episodes:
        overrides["train"] = {"episodes": args.episodes}
    cfg = config_from_dict(overrides, profile="desk")
    rows = cli.run_matrix(cfg, args.out, args.seeds, args.jobs)
    print(cli.format_summary(cli.summarize(rows), [r for r in rows if not r.ok]))


if __name__ == "__main__":
    main()
