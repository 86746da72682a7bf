"""Recovery rate of K on the four-group design, with or without equicorrelated LD.

    python3 scripts/recovery.py --runs 50
    python3 scripts/recovery.py --runs 50 --ld-rho 0.6 --ld-width 50
"""

from __future__ import annotations

import argparse
import json

from erstruct.experiments import run_trials
from erstruct.goe_null import build_null_cache
from erstruct.simulator import SimulationDesign, with_equicorrelated_ld


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--runs", type=int, default=50)
    ap.add_argument("--first-seed", type=int, default=1000)
    ap.add_argument("--p", type=int, default=20_000)
    ap.add_argument("--sizes", type=int, nargs="+", default=[40, 50, 50, 60])
    ap.add_argument("--sigma2", type=float, default=0.5)
    ap.add_argument("--alpha", type=float, default=0.001)
    ap.add_argument("--m", type=int, default=5_000)
    ap.add_argument("--null-seed", type=int, default=2024)
    ap.add_argument("--ld-rho", type=float, default=None)
    ap.add_argument("--ld-width", type=int, default=50)
    args = ap.parse_args()

    design = SimulationDesign(p=args.p, group_sizes=args.sizes, noise_sigma2=args.sigma2, frequency_range=(0.05, 0.95))
    if args.ld_rho is not None:
        design = with_equicorrelated_ld(design, args.ld_rho, args.ld_width)
    cache = build_null_cache(design.n, args.m, args.null_seed)
    s = run_trials(design, range(args.first_seed, args.first_seed + args.runs), cache, alpha=args.alpha)
    print(json.dumps({
        "truth": s.truth,
        "runs": s.runs,
        "hit_rate": s.hit_rate,
        "histogram": s.histogram(),
        "seconds": round(s.seconds, 2),
    }, indent=2))


if __name__ == "__main__":
    main()
