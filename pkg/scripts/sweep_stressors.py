#!/usr/bin/env python3
"""Stress a trained checkpoint along one evaluation axis (traffic density,
communication reliability, equipage rate, or surveillance mode) and write a
machine-readable results table.

Usage:
    python scripts/sweep_stressors.py CHECKPOINT_STEM --axis fleet_size \
        --values 5 10 15 20 --out results.txt
"""

import argparse

from airsep.desk import desk_eval_config
from airsep.evaluation import load_actor, sweep, write_results
from airsep.network import crossing_network


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("checkpoint", help="checkpoint stem written by training")
    ap.add_argument("--axis", default="fleet_size",
                    choices=["fleet_size", "p_comm", "p_equip", "surveillance"])
    ap.add_argument("--values", nargs="+", required=True)
    ap.add_argument("--episodes", type=int, default=20)
    ap.add_argument("--out", default=None, help="results table path")
    args = ap.parse_args()

    cfg = desk_eval_config()
    cfg.episodes = args.episodes
    actor = load_actor(args.checkpoint)
    reports = sweep(actor, crossing_network(), args.axis, args.values, cfg)
    for rep in reports:
        print(f"{rep.descriptor}: risk ratio {rep.risk_ratio}  "
              f"p_nmac {rep.p_nmac_logic:.3f} vs baseline {rep.p_nmac_baseline:.3f}")
    if args.out:
        write_results(reports, args.out)
        print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
