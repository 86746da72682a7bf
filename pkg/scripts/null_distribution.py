"""GOE sanity checks: semicircle fit of one spectrum and the mean of the scaled top eigenvalue."""

from __future__ import annotations

import argparse

import numpy as np

from erstruct.goe_null import build_null_cache, sample_goe


def semicircle_cdf(x: np.ndarray) -> np.ndarray:
    x = np.clip(x, -2.0, 2.0)
    return 0.5 + (x * np.sqrt(4.0 - x**2) / 4.0 + np.arcsin(x / 2.0)) / np.pi


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, nargs="+", default=[100, 200, 400, 800])
    ap.add_argument("--replicates", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    print("n\tKS\tmean(w1)/sqrt(n)\tmean(w2)/sqrt(n)")
    for n in args.n:
        eigs = np.sort(np.linalg.eigvalsh(sample_goe(n, args.seed)) / np.sqrt(n))
        cdf = semicircle_cdf(eigs)
        ks = max((np.arange(1, n + 1) / n - cdf).max(), (cdf - np.arange(n) / n).max())
        cache = build_null_cache(n, args.replicates, args.seed)
        print(f"{n}\t{ks:.4f}\t{cache.w1.mean() / np.sqrt(n):.4f}\t{cache.w2.mean() / np.sqrt(n):.4f}")


if __name__ == "__main__":
    main()
