"""
Monte Carlo replicates of the top two eigenvalues of GOE matrices.

A GOE matrix has independent N(0, 2) diagonal and N(0, 1) off-diagonal
entries, mirrored to be symmetric.  Replicate ``i`` draws from a Philox
stream keyed by ``(master_seed, i)``, so a cache is reproducible regardless
of worker count or execution order.
"""

from __future__ import annotations

import os
import struct
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.linalg
from numpy.typing import NDArray

from .errors import CacheDimensionMismatch, CacheFormatError, DimensionTooSmall

__all__ = [
    "NullCache",
    "DEFAULT_REPLICATES",
    "replicate_seed",
    "sample_goe",
    "sample_goe_top2",
    "build_null_cache",
    "check_replicate_budget",
    "write_null_cache",
    "read_null_cache",
]

DEFAULT_REPLICATES = 5_000
CACHE_MAGIC = b"ERSTNULL"
CACHE_VERSION = 1
# magic, version, reserved, n, m, master_seed
_CACHE_HEADER = struct.Struct("<8sIIQQQ")


def replicate_seed(master_seed: int, index: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(int(master_seed), spawn_key=(int(index),))


def _generator(seed: int | np.random.SeedSequence) -> np.random.Generator:
    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(int(seed))
    return np.random.Generator(np.random.Philox(seed))


@lru_cache(maxsize=8)
def _upper_indices(n: int) -> tuple[NDArray[np.intp], NDArray[np.intp]]:
    return np.triu_indices(n, 1)


def sample_goe(n: int, seed: int | np.random.SeedSequence) -> NDArray[np.float64]:
    """Draw one n x n GOE matrix: n diagonal draws, then the strict upper triangle row by row."""
    if n < 2:
        raise DimensionTooSmall(f"GOE dimension must be at least 2, got {n}")
    rng = _generator(seed)
    diag = rng.standard_normal(n) * np.sqrt(2.0)
    upper = rng.standard_normal(n * (n - 1) // 2)
    w = np.zeros((n, n))
    rows, cols = _upper_indices(n)
    w[rows, cols] = upper
    w[cols, rows] = upper
    w[np.diag_indices(n)] = diag
    return w


def sample_goe_top2(n: int, seed: int | np.random.SeedSequence) -> tuple[float, float]:
    w = sample_goe(n, seed)
    low, high = scipy.linalg.eigvalsh(
        w, subset_by_index=[n - 2, n - 1], overwrite_a=True, check_finite=False, driver="evr"
    )
    return float(high), float(low)


@dataclass(frozen=True)
class NullCache:
    n: int
    m: int
    w1: NDArray[np.float64]
    w2: NDArray[np.float64]
    seed: int

    def require_dimension(self, n: int) -> None:
        if self.n != n:
            raise CacheDimensionMismatch(f"null cache was built for n={self.n}, data has n={n}")


def build_null_cache(n: int, m: int, master_seed: int, workers: int = 1) -> NullCache:
    """Sample ``m`` GOE replicates of size ``n`` and keep their top two eigenvalues."""
    if n < 2:
        raise DimensionTooSmall(f"GOE dimension must be at least 2, got {n}")
    if m < 1:
        raise ValueError("replicate count m must be at least 1")
    if master_seed < 0:
        raise ValueError("master_seed must be non-negative")
    top = np.empty((m, 2))

    def run(i: int) -> None:
        top[i] = sample_goe_top2(n, replicate_seed(master_seed, i))

    if workers <= 1:
        for i in range(m):
            run(i)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(run, range(m)))
    return NullCache(n=n, m=m, w1=top[:, 0].copy(), w2=top[:, 1].copy(), seed=int(master_seed))


def check_replicate_budget(m: int, alpha: float) -> bool:
    """Warn when the critical value would be an extreme order statistic (m * alpha < 10)."""
    if m * alpha < 10:
        warnings.warn(
            f"m * alpha = {m * alpha:g} < 10: the critical value is an extreme order statistic "
            "and will be noisy; consider more replicates",
            RuntimeWarning,
            stacklevel=2,
        )
        return False
    return True


def write_null_cache(path: str | os.PathLike, cache: NullCache) -> None:
    pairs = np.column_stack([cache.w1, cache.w2]).astype("<f8")
    with open(path, "wb") as fh:
        fh.write(_CACHE_HEADER.pack(CACHE_MAGIC, CACHE_VERSION, 0, cache.n, cache.m, cache.seed))
        fh.write(pairs.tobytes())


def read_null_cache(path: str | os.PathLike) -> NullCache:
    with open(path, "rb") as fh:
        header = fh.read(_CACHE_HEADER.size)
        payload = fh.read()
    if len(header) != _CACHE_HEADER.size:
        raise CacheFormatError(f"{path}: truncated header")
    magic, version, _, n, m, seed = _CACHE_HEADER.unpack(header)
    if magic != CACHE_MAGIC:
        raise CacheFormatError(f"{path}: not a null-cache file")
    if version != CACHE_VERSION:
        raise CacheFormatError(f"{path}: unsupported cache version {version}")
    if len(payload) != 16 * m:
        raise CacheFormatError(f"{path}: expected {m} replicate pairs, found {len(payload) / 16:g}")
    pairs = np.frombuffer(payload, dtype="<f8").reshape(m, 2)
    return NullCache(n=int(n), m=int(m), w1=pairs[:, 0].copy(), w2=pairs[:, 1].copy(), seed=int(seed))
