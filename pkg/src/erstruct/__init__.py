"""Eigenvalue-ratio estimation of the number of latent sub-populations in genotype data."""

__version__ = "0.1.0"

from .errors import ERStructError
from .estimator import EstimateReport, critical_value, estimate_k, moment_estimates, null_ratio_replicates
from .genotype_io import ArraySource, filter_markers, marker_stats, open_matrix_text, open_plink
from .goe_null import NullCache, build_null_cache, sample_goe_top2
from .normalize_gram import accumulate_gram, build_standardizer
from .pipeline import compute_spectrum, estimate_from_source
from .spectrum import Spectrum, eigen_decompose, eigenvalue_ratios

__all__ = [
    "__version__",
    "ERStructError",
    "EstimateReport",
    "critical_value",
    "estimate_k",
    "moment_estimates",
    "null_ratio_replicates",
    "ArraySource",
    "filter_markers",
    "marker_stats",
    "open_matrix_text",
    "open_plink",
    "NullCache",
    "build_null_cache",
    "sample_goe_top2",
    "accumulate_gram",
    "build_standardizer",
    "compute_spectrum",
    "estimate_from_source",
    "Spectrum",
    "eigen_decompose",
    "eigenvalue_ratios",
]
