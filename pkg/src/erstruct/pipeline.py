"""Two-pass glue: source -> marker stats -> Gram -> spectrum -> estimate."""

from __future__ import annotations

import logging
from dataclasses import dataclass

from .estimator import DEFAULT_ALPHA, EstimateReport, estimate_k
from .genotype_io import DEFAULT_BLOCK_WIDTH, GenotypeSource, MarkerStats, filter_markers, marker_stats
from .goe_null import NullCache
from .normalize_gram import SymmetricGram, accumulate_gram, build_standardizer
from .spectrum import Spectrum, eigen_decompose

log = logging.getLogger(__name__)

DEFAULT_MAF_MIN = 0.05


@dataclass
class SpectrumResult:
    spectrum: Spectrum
    stats: MarkerStats
    gram: SymmetricGram


def compute_spectrum(
    source: GenotypeSource,
    maf_min: float = DEFAULT_MAF_MIN,
    block_width: int = DEFAULT_BLOCK_WIDTH,
    workers: int = 1,
) -> SpectrumResult:
    log.info("pass 1/2: marker statistics (n=%d, p=%d)", source.n, source.p)
    stats = filter_markers(marker_stats(source, block_width), maf_min)
    log.info("retained %d of %d markers at MAF >= %g", stats.p_kept, stats.p, maf_min)
    log.info("pass 2/2: accumulating Gram matrix")
    gram = accumulate_gram(source, build_standardizer(stats), block_width, workers=workers)
    log.info("eigendecomposition of %d x %d Gram", gram.n, gram.n)
    return SpectrumResult(spectrum=eigen_decompose(gram), stats=stats, gram=gram)


def estimate_from_source(
    source: GenotypeSource,
    cache: NullCache,
    alpha: float = DEFAULT_ALPHA,
    k_coarse: int | None = None,
    maf_min: float = DEFAULT_MAF_MIN,
    block_width: int = DEFAULT_BLOCK_WIDTH,
    workers: int = 1,
) -> tuple[EstimateReport, SpectrumResult]:
    cache.require_dimension(source.n)
    result = compute_spectrum(source, maf_min, block_width, workers)
    report = estimate_k(result.spectrum, cache, alpha=alpha, k_coarse=k_coarse)
    for step in report.steps:
        log.debug("K=%d r=%.6f xi=%.6f %s", step.k, step.r_k, step.xi, step.decision.value)
    return report, result
