#!/usr/bin/env python3
"""Paired A/B over seeds: information-bounded embedding training against the
plain deterministic ranking baseline (bound off, zero-variance head)."""

import argparse
import os
import sys

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from ibgzsl.data import SyntheticSpec, make_synthetic
from ibgzsl import embedding as emb
from ibgzsl.cli import BENCHMARK_DEFAULTS


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seeds", type=int, default=5)
    parser.add_argument("--epochs", type=int, default=emb.EmbedConfig().epochs)
    parser.add_argument("--out", default=None)
    args = parser.parse_args()

    rows = []
    for seed in range(args.seeds):
        bundle = make_synthetic(SyntheticSpec(seed=seed, **BENCHMARK_DEFAULTS))
        config = emb.EmbedConfig(seed=seed, epochs=args.epochs)
        _, log = emb.train_embed(bundle, config)
        _, log_plain = emb.train_embed(bundle, emb.plain_ranking_ablation(config))
        d, p = log[-1], log_plain[-1]
        rows.append((seed, d, p))
        print(f"seed {seed}: bounded U={d['unseen_acc']:.1f} H={d['H']:.1f} "
              f"(kl {d['kl']:.3f}, beta {d['beta']:.2f}) | "
              f"plain U={p['unseen_acc']:.1f} H={p['H']:.1f}", flush=True)

    wins = sum(d["H"] > p["H"] for _, d, p in rows)
    print(f"\nH wins {wins}/{len(rows)}; median H "
          f"{np.median([d['H'] for _, d, _ in rows]):.1f} vs "
          f"{np.median([p['H'] for _, _, p in rows]):.1f}")

    if args.out:
        with open(args.out, "w") as f:
            f.write("seed,arm,U,S,H\n")
            for seed, d, p in rows:
                f.write(f"{seed},bounded,{d['unseen_acc']:.9g},{d['seen_acc']:.9g},{d['H']:.9g}\n")
                f.write(f"{seed},plain,{p['unseen_acc']:.9g},{p['seen_acc']:.9g},{p['H']:.9g}\n")


if __name__ == "__main__":
    main()
