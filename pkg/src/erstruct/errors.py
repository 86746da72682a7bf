"""Exception types raised across the pipeline."""

from __future__ import annotations


class ERStructError(Exception):
    """Base class for every error raised by this package."""


# genotype input
class BadMagic(ERStructError):
    pass


class SampleMajorUnsupported(ERStructError):
    pass


class TruncatedPayload(ERStructError):
    pass


class RaggedRows(ERStructError):
    pass


class InvalidToken(ERStructError):
    pass


class AllMarkersDropped(ERStructError):
    pass


# normalization / Gram
class NoActiveMarkers(ERStructError):
    pass


class DimensionMismatch(ERStructError):
    pass


# spectrum
class IndefiniteMatrix(ERStructError):
    pass


class ConvergenceFailure(ERStructError):
    pass


class ZeroDenominator(ERStructError):
    pass


# null distribution
class DimensionTooSmall(ERStructError):
    pass


class CacheDimensionMismatch(ERStructError):
    pass


class CacheFormatError(ERStructError):
    pass


# estimator
class InsufficientBulk(ERStructError):
    pass


class NonpositiveDenominator(ERStructError):
    pass


class EstimationFailed(ERStructError):
    pass


# simulator
class InvalidDesign(ERStructError):
    pass


class BlockNotPSD(InvalidDesign):
    pass


class BlockTilingMismatch(InvalidDesign):
    pass
