#!/usr/bin/env python3
"""Synthetic-sample-count sweep: train the generation pipeline once per seed,
then refit the final classifier at several synthesis counts per unseen class
and report how U and H respond to the growing synthetic set."""

import argparse
import os
import sys

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from ibgzsl.data import SyntheticSpec, make_synthetic
from ibgzsl import generation as gn
from ibgzsl.cli import BENCHMARK_DEFAULTS

COUNTS = (10, 50, 200, 400)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seeds", type=int, default=5)
    parser.add_argument("--epochs", type=int, default=gn.GenConfig().epochs)
    parser.add_argument("--counts", type=int, nargs="+", default=list(COUNTS))
    parser.add_argument("--out", default=None)
    args = parser.parse_args()

    by_count = {count: {"U": [], "H": []} for count in args.counts}
    for seed in range(args.seeds):
        bundle = make_synthetic(SyntheticSpec(seed=seed, **BENCHMARK_DEFAULTS))
        config = gn.GenConfig(seed=seed, epochs=args.epochs)
        result = gn.train_gen(bundle, config)
        for count in args.counts:
            model = gn.build_final_classifier(bundle, result, config, syn_per_class=count)
            metrics = gn.evaluate_generation(bundle, result, model)
            by_count[count]["U"].append(metrics.U)
            by_count[count]["H"].append(metrics.H)
            print(f"seed {seed} count {count}: U={metrics.U:.1f} H={metrics.H:.1f}", flush=True)

    print("\ncount  median-U  median-H")
    for count in args.counts:
        print(f"{count:>5}  {np.median(by_count[count]['U']):>8.1f}"
              f"  {np.median(by_count[count]['H']):>8.1f}")

    if args.out:
        with open(args.out, "w") as f:
            f.write("count,median_U,median_H\n")
            for count in args.counts:
                f.write(f"{count},{np.median(by_count[count]['U']):.9g},"
                        f"{np.median(by_count[count]['H']):.9g}\n")


if __name__ == "__main__":
    main()
