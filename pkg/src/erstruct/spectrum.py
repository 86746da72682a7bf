"""Eigenvalues of the Gram matrix and the successive eigenvalue ratios."""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from numpy.typing import NDArray

from .errors import ConvergenceFailure, DimensionMismatch, IndefiniteMatrix, ZeroDenominator
from .normalize_gram import SymmetricGram

__all__ = ["Spectrum", "eigen_decompose", "eigenvalue_ratios", "write_scree"]

NEGATIVE_TOL = 1e-8


@dataclass(frozen=True)
class Spectrum:
    """Top ``n - 1`` eigenvalues of the Gram, descending.

    ``ratios`` is computed on first access, so a spectrum with trailing zero
    eigenvalues can still be built and inspected.
    """

    eigs: NDArray[np.float64]
    n: int
    p_used: int
    discarded: float = 0.0

    @cached_property
    def ratios(self) -> NDArray[np.float64]:
        return eigenvalue_ratios(self)

    def scaled(self, c: float) -> "Spectrum":
        return Spectrum(eigs=self.eigs * c, n=self.n, p_used=self.p_used, discarded=self.discarded * c)


def eigen_decompose(gram: SymmetricGram | NDArray, p_used: int | None = None) -> Spectrum:
    """Keep the largest ``n - 1`` eigenvalues; the smallest is the null direction of centering."""
    if isinstance(gram, SymmetricGram):
        values, p_used = gram.values, gram.p_used
    else:
        values = np.asarray(gram, dtype=np.float64)
        p_used = int(p_used or 0)
    if values.ndim != 2 or values.shape[0] != values.shape[1]:
        raise DimensionMismatch("gram must be a square matrix")
    n = values.shape[0]
    if n < 3:
        raise DimensionMismatch("need at least three samples")
    try:
        ascending = np.linalg.eigvalsh(values)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailure(str(exc)) from exc
    eigs = ascending[::-1].copy()
    top = max(float(eigs[0]), 0.0)
    floor = -NEGATIVE_TOL * top
    if eigs[-1] < floor:
        raise IndefiniteMatrix(f"eigenvalue {eigs[-1]:.3e} below tolerance {floor:.3e}")
    discarded = float(eigs[-1])
    kept = np.clip(eigs[:-1], 0.0, None)
    return Spectrum(eigs=kept, n=n, p_used=int(p_used), discarded=discarded)


def eigenvalue_ratios(spectrum: Spectrum) -> NDArray[np.float64]:
    """``r_i = l_{i+1} / l_i`` for ``i = 1 .. n-2``."""
    eigs = spectrum.eigs
    denominators = eigs[:-1]
    if np.any(denominators <= 0.0):
        first = int(np.argmax(denominators <= 0.0)) + 1
        raise ZeroDenominator(f"eigenvalue l_{first} is zero; ratios undefined")
    return eigs[1:] / denominators


def _fmt(x: float) -> str:
    if math.isinf(x):
        return "inf"
    if math.isnan(x):
        return "NA"
    return repr(float(x))


def write_scree(path: str | os.PathLike, spectrum: Spectrum) -> None:
    """TSV with columns ``i, eigenvalue, ratio, -log10(1 - ratio)``; the last row has no ratio."""
    ratios = spectrum.ratios
    with open(path, "w") as fh:
        fh.write("i\teigenvalue\tratio\tneg_log10_1m_ratio\n")
        for i, ell in enumerate(spectrum.eigs, start=1):
            if i <= ratios.shape[0]:
                r = float(ratios[i - 1])
                gap = 1.0 - r
                transformed = math.inf if gap <= 0.0 else -math.log10(gap)
                fh.write(f"{i}\t{_fmt(ell)}\t{_fmt(r)}\t{_fmt(transformed)}\n")
            else:
                fh.write(f"{i}\t{_fmt(ell)}\tNA\tNA\n")
