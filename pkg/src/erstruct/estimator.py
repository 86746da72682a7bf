"""
Sequential eigenvalue-ratio estimate of the number of sub-populations.

For a candidate K the bulk ``l_K .. l_{n-1}`` gives moment estimates
``a_hat`` (mean) and ``b_hat`` (scaled spread).  The null distribution of the
top bulk ratio is approximated by mapping each cached GOE pair ``(w1, w2)`` to

    (w2 * sqrt(b_hat / p) + a_hat) / (w1 * sqrt(b_hat / p) + a_hat)

and the critical value is the ``ceil(m * alpha)``-th smallest of these.  A
candidate is accepted only if it and every later ratio up to ``k_coarse``
stay above the critical value.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Any, Callable

import numpy as np
from numpy.typing import NDArray

from .errors import EstimationFailed, InsufficientBulk, NonpositiveDenominator
from .goe_null import NullCache
from .spectrum import Spectrum

__all__ = [
    "MomentEstimates",
    "Decision",
    "KStepRecord",
    "EstimateReport",
    "DEFAULT_ALPHA",
    "moment_estimates",
    "null_ratio_replicates",
    "critical_value",
    "default_k_coarse",
    "estimate_k",
    "sequential_search",
    "replay_steps",
]

DEFAULT_ALPHA = 0.001
REPORT_VERSION = 1
# fraction of replicates allowed to have a non-positive denominator before giving up
MAX_REJECTED_FRACTION = 0.001


@dataclass(frozen=True)
class MomentEstimates:
    a_hat: float
    b_hat: float
    k: int


class Decision(str, Enum):
    BECAME_VALID = "became_valid"
    STAYED_VALID = "stayed_valid"
    INVALIDATED = "invalidated"
    STILL_SEARCHING = "still_searching"


@dataclass(frozen=True)
class KStepRecord:
    k: int
    a_hat: float
    b_hat: float
    xi: float
    r_k: float
    decision: Decision


@dataclass
class EstimateReport:
    k_hat: int | None
    alpha: float
    k_coarse: int
    m: int
    steps: list[KStepRecord]
    n: int
    p_used: int
    top_eigenvalues: list[float]
    provenance: dict[str, Any] = field(default_factory=dict)

    @property
    def failed(self) -> bool:
        return self.k_hat is None

    def raise_if_failed(self) -> int:
        if self.k_hat is None:
            raise EstimationFailed(
                f"no candidate K <= {self.k_coarse} passed the look-ahead test at alpha={self.alpha}; "
                "try a larger k_coarse or a smaller alpha"
            )
        return self.k_hat

    def to_dict(self) -> dict[str, Any]:
        return {
            "format": "erstruct-report",
            "version": REPORT_VERSION,
            "k_hat": "FAILED" if self.k_hat is None else self.k_hat,
            "alpha": self.alpha,
            "k_coarse": self.k_coarse,
            "m": self.m,
            "steps": [{**asdict(s), "decision": s.decision.value} for s in self.steps],
            "spectrum_summary": {
                "n": self.n,
                "p_used": self.p_used,
                "top_eigenvalues": list(self.top_eigenvalues),
            },
            "provenance": self.provenance,
        }

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> "EstimateReport":
        if doc.get("format") != "erstruct-report":
            raise ValueError("not an erstruct report document")
        k_hat = doc["k_hat"]
        summary = doc["spectrum_summary"]
        return cls(
            k_hat=None if k_hat == "FAILED" else int(k_hat),
            alpha=float(doc["alpha"]),
            k_coarse=int(doc["k_coarse"]),
            m=int(doc["m"]),
            steps=[KStepRecord(**{**s, "decision": Decision(s["decision"])}) for s in doc["steps"]],
            n=int(summary["n"]),
            p_used=int(summary["p_used"]),
            top_eigenvalues=[float(x) for x in summary["top_eigenvalues"]],
            provenance=doc.get("provenance", {}),
        )

    def write_json(self, path: str | os.PathLike) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")


def moment_estimates(spectrum: Spectrum, k: int, p_used: int | None = None) -> MomentEstimates:
    """Bulk mean and spread from ``l_k .. l_{n-1}`` (1-based)."""
    p = spectrum.p_used if p_used is None else p_used
    bulk = spectrum.eigs[k - 1 :]
    count = spectrum.n - k
    if k < 1 or count < 2 or bulk.shape[0] != count:
        raise InsufficientBulk(f"k={k} leaves {max(count, 0)} bulk eigenvalues for n={spectrum.n}; need 2")
    a_hat = float(bulk.sum() / count)
    b_hat = float(p * np.sum((bulk - a_hat) ** 2) / count**2)
    return MomentEstimates(a_hat=a_hat, b_hat=b_hat, k=k)


def null_ratio_replicates(cache: NullCache, a_hat: float, b_hat: float, p_used: int) -> NDArray[np.float64]:
    """Approximate top-bulk ratio for every cached GOE pair, sorted ascending."""
    if a_hat <= 0.0:
        raise ValueError("a_hat must be positive")
    if b_hat < 0.0:
        raise ValueError("b_hat must be non-negative")
    spread = math.sqrt(b_hat / p_used)
    numerators = cache.w2 * spread + a_hat
    denominators = cache.w1 * spread + a_hat
    ok = denominators > 0.0
    rejected = cache.m - int(np.count_nonzero(ok))
    if rejected > MAX_REJECTED_FRACTION * cache.m:
        raise NonpositiveDenominator(f"{rejected} of {cache.m} replicate ratios have a non-positive denominator")
    return np.sort(numerators[ok] / denominators[ok])


def critical_value(sorted_replicates: NDArray[np.float64], alpha: float) -> float:
    """The ``ceil(m * alpha)``-th smallest replicate (1-based)."""
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    m = len(sorted_replicates)
    # round first so that e.g. 1000 * 0.001 is not pushed to 2 by representation error
    index = math.ceil(round(m * alpha, 9))
    index = min(max(index, 1), m)
    return float(sorted_replicates[index - 1])


def default_k_coarse(n: int) -> int:
    return max(1, min(n // 10, n - 2))


def estimate_k(
    spectrum: Spectrum,
    cache: NullCache,
    p_used: int | None = None,
    alpha: float = DEFAULT_ALPHA,
    k_coarse: int | None = None,
) -> EstimateReport:
    """Run the sequential look-ahead test for K = 1 .. k_coarse.

    While no candidate is valid, fresh moment estimates and a fresh critical
    value are computed at each K; once a candidate is valid, later ratios are
    checked against the critical value that validated it.  Returns a report
    whose ``k_hat`` is ``None`` when the loop ends without a valid candidate.
    """
    n = spectrum.n
    p = spectrum.p_used if p_used is None else int(p_used)
    cache.require_dimension(n)
    if k_coarse is None:
        k_coarse = default_k_coarse(n)
    if not 1 <= k_coarse <= n - 2:
        raise ValueError(f"k_coarse must lie in [1, {n - 2}], got {k_coarse}")
    ratios = spectrum.ratios

    def critical(k: int) -> tuple[MomentEstimates, float]:
        est = moment_estimates(spectrum, k, p)
        if est.a_hat <= 0.0:
            raise InsufficientBulk(f"bulk from l_{k} is identically zero")
        return est, critical_value(null_ratio_replicates(cache, est.a_hat, est.b_hat, p), alpha)

    k_hat, steps = sequential_search(ratios, k_coarse, critical)
    top = spectrum.eigs[: min(2 * k_coarse, spectrum.eigs.shape[0])]
    return EstimateReport(
        k_hat=k_hat,
        alpha=alpha,
        k_coarse=k_coarse,
        m=cache.m,
        steps=steps,
        n=n,
        p_used=p,
        top_eigenvalues=[float(x) for x in top],
    )


def sequential_search(
    ratios: NDArray[np.float64],
    k_coarse: int,
    critical: Callable[[int], tuple[MomentEstimates, float]],
) -> tuple[int | None, list[KStepRecord]]:
    """The look-ahead state machine; ``critical(k)`` is consulted only while searching."""
    steps: list[KStepRecord] = []
    k_hat: int | None = None
    valid = False
    governing: MomentEstimates | None = None
    xi = math.nan
    for k in range(1, k_coarse + 1):
        r_k = float(ratios[k - 1])
        if not valid:
            governing, xi = critical(k)
            if r_k > xi:
                k_hat, valid = k, True
                decision = Decision.BECAME_VALID
            else:
                decision = Decision.STILL_SEARCHING
        elif r_k <= xi:
            valid = False
            decision = Decision.INVALIDATED
        else:
            decision = Decision.STAYED_VALID
        assert governing is not None
        steps.append(KStepRecord(k, governing.a_hat, governing.b_hat, xi, r_k, decision))
    return (k_hat if valid else None), steps


def replay_steps(steps: list[KStepRecord]) -> int | None:
    """Recover K-hat from an audit trail by re-running the state machine on recorded values."""
    k_hat, valid, xi = None, False, math.nan
    for step in steps:
        if not valid:
            xi = step.xi
            if step.r_k > xi:
                k_hat, valid = step.k, True
        elif step.r_k <= xi:
            valid = False
    return k_hat if valid else None
