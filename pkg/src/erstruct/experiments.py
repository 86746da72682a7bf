"""Seeded Monte-Carlo trials against the simulator, shared by scripts/ and the acceptance suite."""

from __future__ import annotations

import time
from collections import Counter
from dataclasses import dataclass, field

from .estimator import DEFAULT_ALPHA
from .genotype_io import ArraySource
from .goe_null import NullCache
from .pipeline import DEFAULT_MAF_MIN, estimate_from_source
from .simulator import SimulationDesign, simulate


@dataclass
class TrialSummary:
    truth: int
    estimates: list[int | None] = field(default_factory=list)
    seconds: float = 0.0

    @property
    def runs(self) -> int:
        return len(self.estimates)

    @property
    def hit_rate(self) -> float:
        return sum(k == self.truth for k in self.estimates) / max(self.runs, 1)

    def rate_above(self, k: int) -> float:
        """Share of runs with an estimate above ``k``; failed runs count as above."""
        return sum(e is None or e > k for e in self.estimates) / max(self.runs, 1)

    @property
    def misses(self) -> list[int | None]:
        return [k for k in self.estimates if k != self.truth]

    def histogram(self) -> dict[str, int]:
        counts = Counter("FAILED" if k is None else str(k) for k in self.estimates)
        return dict(sorted(counts.items()))


def run_trials(
    design: SimulationDesign,
    seeds: list[int] | range,
    cache: NullCache,
    alpha: float = DEFAULT_ALPHA,
    maf_min: float = DEFAULT_MAF_MIN,
) -> TrialSummary:
    """Simulate once per seed and estimate K with a shared null cache."""
    summary = TrialSummary(truth=design.k)
    start = time.perf_counter()
    for seed in seeds:
        source = ArraySource(simulate(design, seed=seed).matrix)
        report, _ = estimate_from_source(source, cache, alpha=alpha, maf_min=maf_min)
        summary.estimates.append(report.k_hat)
    summary.seconds = time.perf_counter() - start
    return summary
