#!/usr/bin/env python3
"""Run the fixed desk-scale benchmark: train every pinned seed on the
crossing network and score each greedy policy against the paired
unequipped baseline.

Usage:
    python scripts/train_desk.py [--iterations N] [--seeds 101 202 303]
"""

import argparse

import numpy as np

from airsep.desk import DESK_ITERATIONS, DESK_SEEDS, train_and_evaluate_desk_seeds


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--iterations", type=int, default=DESK_ITERATIONS)
    ap.add_argument("--seeds", type=int, nargs="+", default=list(DESK_SEEDS))
    args = ap.parse_args()

    results = train_and_evaluate_desk_seeds(seeds=tuple(args.seeds),
                                            iterations=args.iterations)
    print(f"total wall time {results.wall_seconds:.0f}s")
    for seed, rep in zip(args.seeds, results.reports):
        dist = np.round(rep.action_distribution, 3)
        print(f"seed {seed}: risk ratio {rep.risk_ratio}  "
              f"p_nmac {rep.p_nmac_logic:.3f} vs baseline {rep.p_nmac_baseline:.3f}  "
              f"action distribution {dist}")


if __name__ == "__main__":
    main()
