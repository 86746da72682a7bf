"""
Per-marker standardization and streaming accumulation of the n x n Gram matrix.

The Gram is ``S = (1/p') * sum_j m_j m_j^T`` over retained markers, where
``m_j = (c_j - mu_j) / sqrt(mu_j (1 - mu_j / 2))`` and missing calls are
imputed by the mean (they contribute zero after centering).
"""

from __future__ import annotations

import os
import struct
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable, Iterator

import numpy as np
from numpy.typing import NDArray
from scipy.linalg.blas import dsyrk

from .errors import DimensionMismatch, NoActiveMarkers
from .genotype_io import DEFAULT_BLOCK_WIDTH, MISSING, GenotypeSource, MarkerStats

__all__ = [
    "Standardizer",
    "SymmetricGram",
    "build_standardizer",
    "accumulate_gram",
    "accumulate_standardized",
    "write_gram",
    "read_gram",
]

_GRAM_HEADER = struct.Struct("<QQ")


@dataclass(frozen=True)
class Standardizer:
    center: NDArray[np.float64]
    scale: NDArray[np.float64]
    active: NDArray[np.bool_]

    @property
    def p(self) -> int:
        return int(self.center.shape[0])

    @property
    def p_active(self) -> int:
        return int(np.count_nonzero(self.active))

    def apply(self, block: NDArray, start: int = 0) -> NDArray[np.float64]:
        """Standardize the active columns of a raw block that begins at marker ``start``."""
        stop = start + block.shape[1]
        active = self.active[start:stop]
        raw = block[:, active]
        out = raw.astype(np.float64, order="F")
        out -= self.center[start:stop][active]
        out *= self.scale[start:stop][active]
        out[raw == MISSING] = 0.0
        return out


def build_standardizer(stats: MarkerStats) -> Standardizer:
    keep = stats.keep & (stats.mu_hat > 0.0) & (stats.mu_hat < 2.0)
    if not keep.any():
        raise NoActiveMarkers("no marker is retained for standardization")
    mu = stats.mu_hat
    scale = np.zeros_like(mu)
    scale[keep] = 1.0 / np.sqrt(mu[keep] * (1.0 - mu[keep] / 2.0))
    return Standardizer(center=mu.copy(), scale=scale, active=keep.copy())


@dataclass(frozen=True)
class SymmetricGram:
    n: int
    values: NDArray[np.float64]
    p_used: int

    @property
    def trace(self) -> float:
        return float(np.trace(self.values))


def _ordered_map(fn: Callable, items: Iterable, workers: int) -> Iterator:
    """Like ``map`` but on a thread pool with a bounded window; results keep input order."""
    if workers <= 1:
        yield from map(fn, items)
        return
    with ThreadPoolExecutor(max_workers=workers) as pool:
        pending: deque = deque()
        for item in items:
            pending.append(pool.submit(fn, item))
            if len(pending) >= 2 * workers:
                yield pending.popleft().result()
        while pending:
            yield pending.popleft().result()


def _partial(block: NDArray[np.float64]) -> NDArray[np.float64]:
    # upper triangle of block @ block.T
    return dsyrk(1.0, np.asfortranarray(block))


def accumulate_standardized(
    blocks: Iterable[NDArray[np.float64]], n: int, workers: int = 1
) -> SymmetricGram:
    """Reduce already-standardized ``(n, w)`` column blocks into ``(1/p') M M^T``.

    Each block gets its own partial product; partials are added in block order,
    so the result does not depend on ``workers``.
    """
    upper = np.zeros((n, n), dtype=np.float64, order="F")
    p_used = 0

    def counted(items: Iterable[NDArray[np.float64]]) -> Iterator[NDArray[np.float64]]:
        nonlocal p_used
        for block in items:
            if block.shape[0] != n:
                raise DimensionMismatch(f"block has {block.shape[0]} rows, expected {n}")
            if block.shape[1]:
                p_used += block.shape[1]
                yield block

    for partial in _ordered_map(_partial, counted(blocks), workers):
        upper += partial
    if p_used == 0:
        raise NoActiveMarkers("no marker columns were accumulated")
    upper = np.triu(upper)
    values = upper + np.triu(upper, 1).T
    values /= p_used
    return SymmetricGram(n=n, values=np.ascontiguousarray(values), p_used=p_used)


def accumulate_gram(
    source: GenotypeSource,
    standardizer: Standardizer,
    block_width: int = DEFAULT_BLOCK_WIDTH,
    workers: int = 1,
) -> SymmetricGram:
    """Second pass over ``source``: standardize retained markers and accumulate the Gram."""
    if standardizer.p != source.p:
        raise DimensionMismatch(f"standardizer covers {standardizer.p} markers, source has {source.p}")
    blocks = (standardizer.apply(block, start) for start, block in source.iter_blocks(block_width))
    gram = accumulate_standardized(blocks, source.n, workers=workers)
    assert gram.p_used == standardizer.p_active
    return gram


def write_gram(path: str | os.PathLike, gram: SymmetricGram) -> None:
    """Header ``(n, p_used)`` as little-endian uint64, then the row-major upper triangle."""
    iu = np.triu_indices(gram.n)
    with open(path, "wb") as fh:
        fh.write(_GRAM_HEADER.pack(gram.n, gram.p_used))
        fh.write(gram.values[iu].astype("<f8").tobytes())


def read_gram(path: str | os.PathLike) -> SymmetricGram:
    with open(path, "rb") as fh:
        n, p_used = _GRAM_HEADER.unpack(fh.read(_GRAM_HEADER.size))
        tri = np.frombuffer(fh.read(), dtype="<f8")
    if tri.size != n * (n + 1) // 2:
        raise DimensionMismatch(f"{path}: expected {n * (n + 1) // 2} values, found {tri.size}")
    values = np.zeros((n, n))
    values[np.triu_indices(n)] = tri
    values = values + np.triu(values, 1).T
    return SymmetricGram(n=int(n), values=values, p_used=int(p_used))
