import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from erstruct.goe_null import build_null_cache  # noqa: E402
from erstruct.simulator import SimulationDesign  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture(scope="session")
def four_group_design():
    """Four groups of 40/50/50/60 samples, 20k markers, frequencies uniform on [0.05, 0.95]."""
    return SimulationDesign(p=20_000, group_sizes=[40, 50, 50, 60], noise_sigma2=0.5, frequency_range=(0.05, 0.95))


@pytest.fixture(scope="session")
def cache_200():
    return build_null_cache(200, 2_000, master_seed=11)


def random_genotypes(rng, n, p, missing_rate=0.0):
    g = rng.integers(0, 3, size=(n, p)).astype(np.int8)
    if missing_rate:
        g[rng.random((n, p)) < missing_rate] = -1
    return g


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
