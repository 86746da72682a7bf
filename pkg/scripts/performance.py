"""Wall-clock breakdown of one end-to-end estimate on a simulated PLINK file."""

from __future__ import annotations

import argparse
import tempfile
import time
from pathlib import Path

from erstruct.estimator import estimate_k
from erstruct.genotype_io import open_plink_prefix, write_plink
from erstruct.goe_null import build_null_cache
from erstruct.pipeline import compute_spectrum
from erstruct.simulator import SimulationDesign, simulate


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sizes", type=int, nargs="+", default=[120, 120, 130, 130])
    ap.add_argument("--p", type=int, default=100_000)
    ap.add_argument("--m", type=int, default=2_000)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--block-width", type=int, default=10_000)
    args = ap.parse_args()

    design = SimulationDesign(p=args.p, group_sizes=args.sizes, noise_sigma2=0.5, frequency_range=(0.05, 0.95))
    with tempfile.TemporaryDirectory() as tmp:
        prefix = Path(tmp) / "g"
        write_plink(prefix, simulate(design, seed=1).matrix)
        t0 = time.perf_counter()
        cache = build_null_cache(design.n, args.m, 0, workers=args.threads)
        t1 = time.perf_counter()
        result = compute_spectrum(open_plink_prefix(prefix), block_width=args.block_width, workers=args.threads)
        t2 = time.perf_counter()
        report = estimate_k(result.spectrum, cache, alpha=0.001)
        t3 = time.perf_counter()
    print(f"n={design.n} p={args.p} m={args.m} threads={args.threads} K_hat={report.k_hat}")
    print(f"null cache {t1 - t0:.2f}s | spectrum {t2 - t1:.2f}s | search {t3 - t2:.3f}s | total {t3 - t0:.2f}s")


if __name__ == "__main__":
    main()
