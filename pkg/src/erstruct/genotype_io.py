"""
Genotype ingestion: streamable sources, per-marker statistics and MAF filtering.

Genotypes are minor-allele counts stored as ``int8`` with ``MISSING = -1``.
Every source yields column blocks of shape ``(n, w)`` in marker order and can
be iterated any number of times (the pipeline makes two passes).
"""

from __future__ import annotations

import os
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np
from numpy.typing import NDArray

from .errors import (
    AllMarkersDropped,
    BadMagic,
    InvalidToken,
    RaggedRows,
    SampleMajorUnsupported,
    TruncatedPayload,
)

__all__ = [
    "MISSING",
    "DEFAULT_BLOCK_WIDTH",
    "GenotypeSource",
    "ArraySource",
    "PlinkSource",
    "MarkerStats",
    "open_plink",
    "open_matrix_text",
    "marker_stats",
    "filter_markers",
    "write_plink",
    "write_matrix_text",
]

MISSING = -1
DEFAULT_BLOCK_WIDTH = 10_000

PLINK_MAGIC = b"\x6c\x1b"
PLINK_VARIANT_MAJOR = 0x01
PLINK_SAMPLE_MAJOR = 0x00

# 2-bit code -> minor-allele count
_CODE_TO_COUNT = np.array([2, MISSING, 1, 0], dtype=np.int8)
# count (offset by +1 so MISSING indexes 0) -> 2-bit code
_COUNT_TO_CODE = np.array([0b01, 0b11, 0b10, 0b00], dtype=np.uint8)


def _byte_table() -> NDArray[np.int8]:
    table = np.empty((256, 4), dtype=np.int8)
    for byte in range(256):
        for j in range(4):
            table[byte, j] = _CODE_TO_COUNT[(byte >> (2 * j)) & 0b11]
    return table


_DECODE = _byte_table()


class GenotypeSource:
    """Base class for a rewindable n x p genotype matrix read in marker blocks."""

    rewindable: bool = True

    def __init__(self, n: int, p: int) -> None:
        self.n = int(n)
        self.p = int(p)

    def _read(self, start: int, stop: int) -> NDArray[np.int8]:
        raise NotImplementedError

    def iter_blocks(self, block_width: int = DEFAULT_BLOCK_WIDTH) -> Iterator[tuple[int, NDArray[np.int8]]]:
        """Yield ``(start, block)`` pairs covering columns ``0..p-1`` once, in order."""
        if block_width < 1:
            raise ValueError("block_width must be at least 1")
        for start in range(0, self.p, block_width):
            stop = min(start + block_width, self.p)
            yield start, self._read(start, stop)

    def to_array(self) -> NDArray[np.int8]:
        out = np.empty((self.n, self.p), dtype=np.int8)
        for start, block in self.iter_blocks():
            out[:, start : start + block.shape[1]] = block
        return out

    def __repr__(self) -> str:
        return f"{type(self).__name__}(n={self.n}, p={self.p})"


class ArraySource(GenotypeSource):
    """In-memory source backed by an ``(n, p)`` array of counts."""

    def __init__(self, matrix: NDArray | Sequence[Sequence[int]]) -> None:
        data = np.asarray(matrix)
        if data.ndim != 2:
            raise ValueError("genotype matrix must be two-dimensional")
        if data.size and not np.isin(data, (0, 1, 2, MISSING)).all():
            raise InvalidToken("genotype values must be 0, 1, 2 or MISSING")
        super().__init__(*data.shape)
        self._data = np.ascontiguousarray(data, dtype=np.int8)
        self._data.setflags(write=False)

    def _read(self, start: int, stop: int) -> NDArray[np.int8]:
        return self._data[:, start:stop]


class PlinkSource(GenotypeSource):
    """Variant-major PLINK .bed file, memory-mapped and decoded per block."""

    def __init__(self, bed_path: str | os.PathLike, n: int, p: int, labels: list[str] | None = None) -> None:
        super().__init__(n, p)
        self.bed_path = Path(bed_path)
        self.labels = labels
        self.bytes_per_marker = (n + 3) // 4
        if p and n:
            self._raw = np.memmap(self.bed_path, dtype=np.uint8, mode="r", offset=3, shape=(p, self.bytes_per_marker))
        else:
            self._raw = np.zeros((p, self.bytes_per_marker), dtype=np.uint8)

    def _read(self, start: int, stop: int) -> NDArray[np.int8]:
        packed = np.asarray(self._raw[start:stop])
        decoded = _DECODE[packed].reshape(stop - start, -1)[:, : self.n]
        return decoded.T


def _count_lines(path: Path) -> list[str]:
    with open(path) as fh:
        return [line for line in fh if line.strip()]


def open_plink(bed_path: str | os.PathLike, bim_path: str | os.PathLike, fam_path: str | os.PathLike) -> PlinkSource:
    """Open a PLINK binary triplet; n and p come from the .fam and .bim line counts."""
    bed_path, bim_path, fam_path = Path(bed_path), Path(bim_path), Path(fam_path)
    fam_lines = _count_lines(fam_path)
    n = len(fam_lines)
    p = len(_count_lines(bim_path))
    with open(bed_path, "rb") as fh:
        header = fh.read(3)
    if len(header) < 3 or header[:2] != PLINK_MAGIC:
        raise BadMagic(f"{bed_path}: not a PLINK .bed file (magic {header[:2]!r})")
    if header[2] == PLINK_SAMPLE_MAJOR:
        raise SampleMajorUnsupported(f"{bed_path}: sample-major .bed files are not supported")
    if header[2] != PLINK_VARIANT_MAJOR:
        raise BadMagic(f"{bed_path}: unknown mode byte {header[2]:#04x}")
    expected = 3 + p * ((n + 3) // 4)
    actual = bed_path.stat().st_size
    if actual != expected:
        raise TruncatedPayload(f"{bed_path}: expected {expected} bytes for n={n}, p={p}, found {actual}")
    labels = [line.split()[0] for line in fam_lines]
    return PlinkSource(bed_path, n, p, labels=labels)


def open_plink_prefix(prefix: str | os.PathLike) -> PlinkSource:
    prefix = str(prefix)
    return open_plink(prefix + ".bed", prefix + ".bim", prefix + ".fam")


def open_matrix_text(path: str | os.PathLike, delimiter: str | None = ",") -> ArraySource:
    """Read a delimited text matrix (one row per sample); ``NA`` marks a missing call.

    ``delimiter=None`` splits on runs of whitespace.
    """
    tokens = {"0": 0, "1": 1, "2": 2, "NA": MISSING}
    rows: list[list[int]] = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            fields = line.split(delimiter)
            try:
                rows.append([tokens[f.strip()] for f in fields])
            except KeyError as exc:
                raise InvalidToken(f"{path}:{lineno}: invalid genotype token {exc.args[0]!r}") from None
            if len(rows[-1]) != len(rows[0]):
                raise RaggedRows(f"{path}:{lineno}: expected {len(rows[0])} columns, found {len(rows[-1])}")
    if not rows:
        return ArraySource(np.zeros((0, 0), dtype=np.int8))
    return ArraySource(np.array(rows, dtype=np.int8))


@dataclass(frozen=True)
class MarkerStats:
    """Per-marker mean count, call count, MAF and keep flag."""

    mu_hat: NDArray[np.float64]
    n_called: NDArray[np.int64]
    maf: NDArray[np.float64]
    keep: NDArray[np.bool_]

    @property
    def p(self) -> int:
        return int(self.mu_hat.shape[0])

    @property
    def p_kept(self) -> int:
        return int(np.count_nonzero(self.keep))


def marker_stats(source: GenotypeSource, block_width: int = DEFAULT_BLOCK_WIDTH) -> MarkerStats:
    """First pass: mean count over non-missing calls, MAF, and the standardizable flag."""
    if source.n < 2:
        raise ValueError("marker statistics need at least two samples")
    sums = np.zeros(source.p, dtype=np.float64)
    called = np.zeros(source.p, dtype=np.int64)
    for start, block in source.iter_blocks(block_width):
        stop = start + block.shape[1]
        observed = block != MISSING
        called[start:stop] = observed.sum(axis=0)
        sums[start:stop] = np.where(observed, block, 0).sum(axis=0, dtype=np.int64)
    with np.errstate(invalid="ignore", divide="ignore"):
        mu = np.where(called > 0, sums / np.maximum(called, 1), 0.0)
    maf = np.minimum(mu / 2.0, 1.0 - mu / 2.0)
    keep = (called > 0) & (mu > 0.0) & (mu < 2.0)
    return MarkerStats(mu_hat=mu, n_called=called, maf=maf, keep=keep)


def filter_markers(stats: MarkerStats, maf_min: float) -> MarkerStats:
    """Drop markers whose MAF is below ``maf_min`` (markers at the threshold are kept)."""
    if maf_min < 0.0:
        raise ValueError("maf_min must be non-negative")
    keep = stats.keep & (stats.maf >= maf_min)
    if not keep.any():
        raise AllMarkersDropped(f"no marker has MAF >= {maf_min} (of {stats.p} markers)")
    return replace(stats, keep=keep)


def _encode_bed(matrix: NDArray[np.int8]) -> NDArray[np.uint8]:
    n, p = matrix.shape
    bpm = (n + 3) // 4
    codes = np.zeros((p, bpm * 4), dtype=np.uint8)
    codes[:, :n] = _COUNT_TO_CODE[matrix.T.astype(np.int16) + 1]
    return (codes[:, 0::4] | (codes[:, 1::4] << 2) | (codes[:, 2::4] << 4) | (codes[:, 3::4] << 6)).astype(np.uint8)


def write_plink(
    prefix: str | os.PathLike,
    matrix: NDArray,
    labels: Sequence | None = None,
    marker_ids: Sequence[str] | None = None,
) -> None:
    """Write ``matrix`` (n x p counts, MISSING allowed) as a variant-major PLINK triplet.

    Group labels, when given, go to the family-ID column of the .fam file.
    """
    data = np.asarray(matrix)
    if data.ndim != 2:
        raise ValueError("genotype matrix must be two-dimensional")
    if data.size and not np.isin(data, (0, 1, 2, MISSING)).all():
        raise InvalidToken("genotype values must be 0, 1, 2 or MISSING")
    n, p = data.shape
    prefix = str(prefix)
    with open(prefix + ".bed", "wb") as fh:
        fh.write(PLINK_MAGIC + bytes([PLINK_VARIANT_MAJOR]))
        fh.write(_encode_bed(data.astype(np.int8)).tobytes())
    with open(prefix + ".bim", "w") as fh:
        for j in range(p):
            mid = marker_ids[j] if marker_ids is not None else f"m{j + 1}"
            fh.write(f"1\t{mid}\t0\t{j + 1}\tA\tB\n")
    with open(prefix + ".fam", "w") as fh:
        for i in range(n):
            fid = str(labels[i]) if labels is not None else f"f{i + 1}"
            fh.write(f"{fid} s{i + 1} 0 0 0 -9\n")


def write_matrix_text(path: str | os.PathLike, matrix: NDArray, delimiter: str = ",") -> None:
    data = np.asarray(matrix)
    with open(path, "w") as fh:
        for row in data:
            fh.write(delimiter.join("NA" if v == MISSING else str(int(v)) for v in row))
            fh.write("\n")
