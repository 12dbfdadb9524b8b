"""Measure how sampling error decays with the per-observable shot budget.

Draws one exact sample set and repeated finite-shot sets from the same input
stream, then fits the log-log slope of W1 against shots.  The square-root law
predicts a slope near -1/2.
"""

import argparse

import numpy as np

from evsampler.families import uniform_1d
from evsampler.generators import build_product_encoder
from evsampler.metrics import w1_1d
from evsampler.reuploading import FitConfig
from evsampler.samplers import ShotConfig, sample_exact, sample_with_shots


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--shots", type=int, nargs="+",
                    default=[100, 316, 1000, 3162, 10000])
    ap.add_argument("--samples", type=int, default=10_000)
    ap.add_argument("--layers", type=int, default=2)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    cfg = FitConfig(grid_points_per_dim=32, max_iters=300, restarts=2,
                    seed=args.seed)
    model = build_product_encoder(uniform_1d(), args.layers, fit_cfg=cfg)
    exact = sample_exact(model, args.samples, seed=args.seed + 5).values[:, 0]

    print(f"{'shots':>8} {'W1(exact, shots)':>18}")
    dists = []
    for t in args.shots:
        noisy = sample_with_shots(model, args.samples, ShotConfig(t),
                                  seed=args.seed + 5).values[:, 0]
        dists.append(w1_1d(exact, noisy))
        print(f"{t:>8} {dists[-1]:>18.6f}")

    slope = np.polyfit(np.log(args.shots), np.log(dists), 1)[0]
    print(f"log-log slope: {slope:.3f} (sqrt law predicts -0.5)")


if __name__ == "__main__":
    main()
