"""How often pure noise (a single population) yields an estimate above 1, across several alphas."""

from __future__ import annotations

import argparse

from erstruct.experiments import run_trials
from erstruct.goe_null import build_null_cache
from erstruct.simulator import SimulationDesign


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--runs", type=int, default=200)
    ap.add_argument("--n", type=int, default=200)
    ap.add_argument("--p", type=int, default=20_000)
    ap.add_argument("--alphas", type=float, nargs="+", default=[0.001, 0.01, 0.05])
    ap.add_argument("--m", type=int, default=5_000)
    args = ap.parse_args()

    design = SimulationDesign(p=args.p, group_sizes=[args.n], noise_sigma2=0.5, frequency_range=(0.05, 0.95))
    cache = build_null_cache(args.n, args.m, master_seed=2024)
    print("alpha\tP(K_hat>1)\thistogram")
    for alpha in args.alphas:
        s = run_trials(design, range(3000, 3000 + args.runs), cache, alpha=alpha)
        print(f"{alpha}\t{s.rate_above(1):.3f}\t{s.histogram()}")


if __name__ == "__main__":
    main()
