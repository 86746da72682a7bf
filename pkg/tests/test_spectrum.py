import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_genotypes
from oracles import jacobi_eigenvalues

from erstruct.errors import IndefiniteMatrix, ZeroDenominator
from erstruct.genotype_io import ArraySource, marker_stats
from erstruct.normalize_gram import accumulate_gram, build_standardizer
from erstruct.simulator import SimulationDesign, simulate
from erstruct.spectrum import Spectrum, eigen_decompose, eigenvalue_ratios, write_scree


def _spectrum_of(eigs, n=None):
    eigs = np.asarray(eigs, dtype=float)
    return Spectrum(eigs=eigs, n=n or eigs.shape[0] + 1, p_used=100)


def _random_gram(rng, n, p):
    src = ArraySource(random_genotypes(rng, n, p))
    return accumulate_gram(src, build_standardizer(marker_stats(src)))


def test_diagonal_drops_smallest():
    spec = eigen_decompose(np.diag([3.0, 1.0, 2.0]))
    np.testing.assert_array_equal(spec.eigs, [3.0, 2.0])
    assert spec.discarded == 1.0


def test_degenerate_pair_kept():
    spec = eigen_decompose(np.diag([2.0, 2.0, 0.0]))
    np.testing.assert_array_equal(spec.eigs, [2.0, 2.0])
    np.testing.assert_array_equal(spec.ratios, [1.0])


def test_jacobi_oracle_self_check(rng):
    a = rng.standard_normal((5, 5))
    a = a + a.T
    np.testing.assert_allclose(jacobi_eigenvalues(a), np.sort(np.linalg.eigvalsh(a))[::-1], atol=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_eigenvalues_match_jacobi_oracle(seed):
    gram = _random_gram(np.random.default_rng(seed), 8, 300)
    spec = eigen_decompose(gram)
    oracle = jacobi_eigenvalues(gram.values)[:7]
    np.testing.assert_allclose(spec.eigs, oracle, rtol=1e-9)


def test_eigenpair_residuals(rng):
    gram = _random_gram(rng, 30, 400)
    vals, vecs = np.linalg.eigh(gram.values)
    spec = eigen_decompose(gram)
    for i in range(1, 30):
        v = vecs[:, i]
        assert np.linalg.norm(gram.values @ v - vals[i] * v) <= 1e-8 * spec.eigs[0]
    np.testing.assert_allclose(spec.eigs, vals[::-1][:-1], rtol=1e-12)


def test_ratio_examples():
    np.testing.assert_array_equal(eigenvalue_ratios(_spectrum_of([4, 2, 1])), [0.5, 0.5])
    np.testing.assert_array_equal(eigenvalue_ratios(_spectrum_of([1.7] * 5)), [1.0] * 4)
    np.testing.assert_allclose(eigenvalue_ratios(_spectrum_of([10, 2.2, 2.0, 1.8])), [0.22, 0.909091, 0.9], atol=1e-6)


def test_zero_denominator():
    with pytest.raises(ZeroDenominator):
        eigenvalue_ratios(_spectrum_of([3.0, 0.0, 0.0]))
    # a zero in the last position only affects the numerator
    np.testing.assert_array_equal(eigenvalue_ratios(_spectrum_of([2.0, 1.0, 0.0])), [0.5, 0.0])


def test_indefinite_rejected_and_noise_clamped():
    with pytest.raises(IndefiniteMatrix):
        eigen_decompose(np.diag([1.0, 0.5, -0.1]))
    spec = eigen_decompose(np.diag([1.0, -1e-12, -5e-10]))
    assert spec.eigs.min() == 0.0


@given(seed=st.integers(0, 2**31), c=st.sampled_from([0.1, 0.5, 3.0, 10.0]))
@settings(max_examples=25, deadline=None)
def test_scale_equivariance_and_trace(seed, c):
    gram = _random_gram(np.random.default_rng(seed), 9, 80)
    base = eigen_decompose(gram)
    scaled = eigen_decompose(gram.values * c, p_used=gram.p_used)
    np.testing.assert_allclose(scaled.eigs, c * base.eigs, rtol=1e-10, atol=1e-12 * c * base.eigs[0])
    np.testing.assert_allclose(scaled.ratios, base.ratios, rtol=0, atol=1e-12)
    total = base.eigs.sum() + base.discarded
    assert total == pytest.approx(np.trace(gram.values), rel=1e-9)
    assert np.all(np.diff(base.eigs) <= 0)
    assert np.all((base.ratios >= 0) & (base.ratios <= 1))


def test_spike_bulk_gap():
    design = SimulationDesign(p=8000, group_sizes=[30, 30, 30], frequency_range=(0.05, 0.95))
    src = ArraySource(simulate(design, seed=3).matrix)
    spec = eigen_decompose(accumulate_gram(src, build_standardizer(marker_stats(src))))
    r = spec.ratios
    # K = 3: two spikes, so the gap sits at r_2 and ratios from r_3 on hug 1
    assert r[1] < 0.2
    assert np.all(r[2:20] > 0.9)


def test_scree_tsv(tmp_path):
    spec = _spectrum_of([4.0, 2.0, 2.0, 1.0])
    write_scree(tmp_path / "s.tsv", spec)
    lines = (tmp_path / "s.tsv").read_text().splitlines()
    assert lines[0].split("\t") == ["i", "eigenvalue", "ratio", "neg_log10_1m_ratio"]
    row1 = lines[1].split("\t")
    assert row1[:3] == ["1", "4.0", "0.5"]
    assert float(row1[3]) == pytest.approx(-math.log10(0.5))
    assert lines[2].split("\t")[2:] == ["1.0", "inf"]
    assert lines[4].split("\t") == ["4", "1.0", "NA", "NA"]
