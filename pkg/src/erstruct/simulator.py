"""
Synthetic genotypes from the ANOVA model ``c = mu_k + eps`` followed by rounding to {0, 1, 2}.

Group means come from an explicit K x p profile, from per-group allele
frequencies (``mu_k ~ Binomial(2, q_k)``), or from frequencies drawn uniformly
on a range.  Noise is N(0, sigma2 * I) or, with LD blocks, N(0, sigma2 * Sigma_k)
with Sigma_k block diagonal.

Every group draws from its own Philox streams keyed by ``(seed, group_id)``,
so permuting groups together with their ids permutes rows and nothing else.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, replace
from typing import Any, Sequence

import numpy as np
from numpy.typing import NDArray

from .errors import BlockNotPSD, BlockTilingMismatch, InvalidDesign

__all__ = [
    "SimulationDesign",
    "SimulatedGenotypes",
    "rounding_map",
    "equicorrelation_block",
    "tile_blocks",
    "with_equicorrelated_ld",
    "latent_matrix",
    "simulate",
    "simulate_uncorrelated",
    "simulate_block_ld",
    "design_from_dict",
    "design_to_dict",
    "load_design",
]

DESIGN_VERSION = 1
PSD_CLIP = -1e-10
_MEAN_STREAM, _NOISE_STREAM = 0, 1


@dataclass
class SimulationDesign:
    p: int
    group_sizes: Sequence[int]
    noise_sigma2: float = 0.5
    mean_profile: NDArray[np.float64] | None = None
    frequencies: NDArray[np.float64] | None = None
    frequency_range: tuple[float, float] | None = None
    ld_blocks: list[list[NDArray[np.float64]]] | None = None
    group_ids: Sequence[int] | None = None
    seed: int = 0
    ld_spec: dict[str, Any] | None = field(default=None, repr=False)

    @property
    def k(self) -> int:
        return len(self.group_sizes)

    @property
    def n(self) -> int:
        return int(sum(self.group_sizes))

    def ids(self) -> list[int]:
        return list(range(self.k)) if self.group_ids is None else [int(g) for g in self.group_ids]

    def validate(self) -> None:
        if self.p < 1:
            raise InvalidDesign("p must be at least 1")
        if self.k < 1 or any(int(s) < 1 for s in self.group_sizes):
            raise InvalidDesign("need at least one group and every group size >= 1")
        if not self.noise_sigma2 >= 0.0:
            raise InvalidDesign("noise_sigma2 must be non-negative")
        ids = self.ids()
        if len(ids) != self.k or len(set(ids)) != self.k or min(ids) < 0:
            raise InvalidDesign("group_ids must be distinct non-negative integers, one per group")
        recipes = [self.mean_profile is not None, self.frequencies is not None, self.frequency_range is not None]
        if sum(recipes) != 1:
            raise InvalidDesign("give exactly one of mean_profile, frequencies, frequency_range")
        if self.mean_profile is not None:
            prof = np.asarray(self.mean_profile, dtype=float)
            if prof.shape != (self.k, self.p):
                raise InvalidDesign(f"mean_profile must have shape ({self.k}, {self.p})")
            if np.any(prof < 0.0) or np.any(prof > 2.0):
                raise InvalidDesign("mean_profile entries must lie in [0, 2]")
        if self.frequencies is not None:
            freq = np.asarray(self.frequencies, dtype=float)
            if freq.shape != (self.k, self.p):
                raise InvalidDesign(f"frequencies must have shape ({self.k}, {self.p})")
            if np.any(freq < 0.0) or np.any(freq > 1.0):
                raise InvalidDesign("frequencies must lie in [0, 1]")
        if self.frequency_range is not None:
            lo, hi = self.frequency_range
            if not 0.0 <= lo <= hi <= 1.0:
                raise InvalidDesign("frequency_range must satisfy 0 <= low <= high <= 1")
        if self.ld_blocks is not None:
            if len(self.ld_blocks) != self.k:
                raise BlockTilingMismatch(f"need one block list per group ({self.k}), got {len(self.ld_blocks)}")
            for g, blocks in enumerate(self.ld_blocks):
                width = 0
                for block in blocks:
                    b = np.asarray(block)
                    if b.ndim != 2 or b.shape[0] != b.shape[1]:
                        raise InvalidDesign(f"group {g}: LD blocks must be square")
                    if not np.array_equal(b, b.T):
                        raise InvalidDesign(f"group {g}: LD block is not symmetric")
                    if not np.allclose(np.diag(b), 1.0):
                        raise InvalidDesign(f"group {g}: LD block must have unit diagonal")
                    width += b.shape[0]
                if width != self.p:
                    raise BlockTilingMismatch(f"group {g}: LD blocks cover {width} markers, p = {self.p}")


@dataclass(frozen=True)
class SimulatedGenotypes:
    matrix: NDArray[np.int8]
    labels: NDArray[np.int64]


def rounding_map(x: NDArray | float) -> NDArray[np.int8]:
    """``x < 0.5 -> 0``, ``0.5 <= x < 1.5 -> 1``, ``x >= 1.5 -> 2``."""
    x = np.asarray(x)
    return ((x >= 1.5).astype(np.int8) - (x < 0.5).astype(np.int8) + 1).astype(np.int8)


def equicorrelation_block(width: int, rho: float) -> NDArray[np.float64]:
    block = np.full((width, width), float(rho))
    np.fill_diagonal(block, 1.0)
    return block


def tile_blocks(p: int, width: int, block: NDArray[np.float64]) -> list[NDArray[np.float64]]:
    """Cover ``p`` markers with copies of ``block``; a short final block is its leading submatrix."""
    full, rest = divmod(p, width)
    blocks = [block] * full
    if rest:
        blocks.append(block[:rest, :rest].copy())
    return blocks


def with_equicorrelated_ld(design: SimulationDesign, rho: float, width: int) -> SimulationDesign:
    """Same design with every group's noise in equicorrelated blocks of ``width`` markers."""
    blocks = tile_blocks(design.p, width, equicorrelation_block(width, rho))
    return replace(
        design,
        ld_blocks=[blocks for _ in range(design.k)],
        ld_spec={"kind": "equicorrelation", "rho": float(rho), "width": int(width)},
    )


def _stream(seed: int, group_id: int, purpose: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed), spawn_key=(group_id, purpose))))


def _symmetric_sqrt(block: NDArray[np.float64]) -> NDArray[np.float64]:
    vals, vecs = np.linalg.eigh(block)
    if vals.min() < PSD_CLIP:
        raise BlockNotPSD(f"LD block has eigenvalue {vals.min():.3e}")
    root = (vecs * np.sqrt(np.clip(vals, 0.0, None))) @ vecs.T
    return 0.5 * (root + root.T)


def _group_means(design: SimulationDesign, g: int, rng: np.random.Generator) -> NDArray[np.float64]:
    if design.mean_profile is not None:
        return np.asarray(design.mean_profile, dtype=float)[g]
    if design.frequencies is not None:
        q = np.asarray(design.frequencies, dtype=float)[g]
    else:
        lo, hi = design.frequency_range  # type: ignore[misc]
        q = rng.uniform(lo, hi, size=design.p)
    return rng.binomial(2, q).astype(float)


def latent_matrix(design: SimulationDesign, seed: int | None = None) -> tuple[NDArray[np.float64], NDArray[np.int64]]:
    """Continuous ``mu_k + eps`` before rounding, with the group label of every row."""
    design.validate()
    seed = design.seed if seed is None else seed
    sd = np.sqrt(design.noise_sigma2)
    rows, labels = [], []
    roots: dict[int, NDArray[np.float64]] = {}
    for g, (size, gid) in enumerate(zip(design.group_sizes, design.ids())):
        mu = _group_means(design, g, _stream(seed, gid, _MEAN_STREAM))
        noise = _stream(seed, gid, _NOISE_STREAM).standard_normal((int(size), design.p))
        if design.ld_blocks is not None:
            start = 0
            for block in design.ld_blocks[g]:
                width = block.shape[0]
                key = id(block)
                if key not in roots:
                    roots[key] = _symmetric_sqrt(np.asarray(block, dtype=float))
                noise[:, start : start + width] = noise[:, start : start + width] @ roots[key]
                start += width
        rows.append(mu + sd * noise)
        labels.append(np.full(int(size), g, dtype=np.int64))
    return np.vstack(rows), np.concatenate(labels)


def simulate(design: SimulationDesign, seed: int | None = None) -> SimulatedGenotypes:
    latent, labels = latent_matrix(design, seed)
    return SimulatedGenotypes(matrix=rounding_map(latent), labels=labels)


def simulate_uncorrelated(design: SimulationDesign, seed: int | None = None) -> SimulatedGenotypes:
    if design.ld_blocks is not None:
        raise InvalidDesign("design has LD blocks; use simulate_block_ld")
    return simulate(design, seed)


def simulate_block_ld(design: SimulationDesign, seed: int | None = None) -> SimulatedGenotypes:
    if design.ld_blocks is None:
        raise InvalidDesign("design has no LD blocks; use simulate_uncorrelated")
    return simulate(design, seed)


def design_from_dict(doc: dict[str, Any]) -> SimulationDesign:
    try:
        version = doc.get("version", DESIGN_VERSION)
        if version != DESIGN_VERSION:
            raise InvalidDesign(f"unsupported design version {version}")
        means = doc["means"]
        kind = means["kind"]
        kwargs: dict[str, Any] = {}
        if kind == "profile":
            kwargs["mean_profile"] = np.asarray(means["values"], dtype=float)
        elif kind == "frequencies":
            kwargs["frequencies"] = np.asarray(means["values"], dtype=float)
        elif kind == "frequency_range":
            kwargs["frequency_range"] = (float(means["low"]), float(means["high"]))
        else:
            raise InvalidDesign(f"unknown means kind {kind!r}")
        design = SimulationDesign(
            p=int(doc["p"]),
            group_sizes=[int(s) for s in doc["group_sizes"]],
            noise_sigma2=float(doc.get("noise_sigma2", 0.5)),
            group_ids=doc.get("group_ids"),
            seed=int(doc.get("seed", 0)),
            **kwargs,
        )
        ld = doc.get("ld")
        if ld is not None:
            if ld["kind"] == "equicorrelation":
                design = with_equicorrelated_ld(design, float(ld["rho"]), int(ld["width"]))
            elif ld["kind"] == "blocks":
                design.ld_blocks = [[np.asarray(b, dtype=float) for b in group] for group in ld["groups"]]
            else:
                raise InvalidDesign(f"unknown ld kind {ld['kind']!r}")
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidDesign(f"malformed design: {exc!r}") from exc
    design.validate()
    return design


def design_to_dict(design: SimulationDesign) -> dict[str, Any]:
    if design.mean_profile is not None:
        means: dict[str, Any] = {"kind": "profile", "values": np.asarray(design.mean_profile).tolist()}
    elif design.frequencies is not None:
        means = {"kind": "frequencies", "values": np.asarray(design.frequencies).tolist()}
    else:
        lo, hi = design.frequency_range  # type: ignore[misc]
        means = {"kind": "frequency_range", "low": lo, "high": hi}
    if design.ld_spec is not None:
        ld: dict[str, Any] | None = dict(design.ld_spec)
    elif design.ld_blocks is not None:
        ld = {"kind": "blocks", "groups": [[np.asarray(b).tolist() for b in g] for g in design.ld_blocks]}
    else:
        ld = None
    doc: dict[str, Any] = {
        "version": DESIGN_VERSION,
        "p": design.p,
        "group_sizes": [int(s) for s in design.group_sizes],
        "noise_sigma2": design.noise_sigma2,
        "means": means,
        "ld": ld,
        "seed": design.seed,
    }
    if design.group_ids is not None:
        doc["group_ids"] = [int(g) for g in design.group_ids]
    return doc


def load_design(path: str | os.PathLike) -> SimulationDesign:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InvalidDesign(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise InvalidDesign(f"{path}: design must be a JSON object")
    return design_from_dict(doc)
