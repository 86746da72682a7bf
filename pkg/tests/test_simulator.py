import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import normal_cdf

from erstruct.errors import BlockNotPSD, BlockTilingMismatch, InvalidDesign
from erstruct.genotype_io import ArraySource, marker_stats
from erstruct.normalize_gram import accumulate_gram, build_standardizer
from erstruct.simulator import (
    SimulationDesign,
    design_from_dict,
    design_to_dict,
    equicorrelation_block,
    latent_matrix,
    load_design,
    rounding_map,
    simulate,
    simulate_block_ld,
    simulate_uncorrelated,
    tile_blocks,
    with_equicorrelated_ld,
)
from erstruct.spectrum import eigen_decompose


def test_rounding_truth_table():
    xs = [-0.2, 0.0, 0.4999, 0.5, 1.0, 1.4999, 1.5, 2.0, 3.7]
    assert rounding_map(xs).tolist() == [0, 0, 0, 1, 1, 1, 2, 2, 2]
    assert int(rounding_map(-0.2)) == 0


@given(st.floats(-10, 10, allow_nan=False))
def test_rounding_matches_indicator_formula(x):
    expected = (1 if x >= 1.5 else 0) - (1 if x < 0.5 else 0) + 1
    assert int(rounding_map(x)) == expected


def test_zero_noise_rows_are_rounded_means():
    profile = np.array([[0.2, 0.7, 1.6, 1.2], [1.9, 0.4, 0.5, 1.5]])
    design = SimulationDesign(p=4, group_sizes=[3, 2], noise_sigma2=0.0, mean_profile=profile)
    sim = simulate_uncorrelated(design, seed=1)
    assert sim.labels.tolist() == [0, 0, 0, 1, 1]
    np.testing.assert_array_equal(sim.matrix[:3], np.tile(rounding_map(profile[0]), (3, 1)))
    np.testing.assert_array_equal(sim.matrix[3:], np.tile(rounding_map(profile[1]), (2, 1)))


def test_two_extreme_groups_one_spike():
    profile = np.vstack([np.zeros(500), np.full(500, 2.0)])
    design = SimulationDesign(p=500, group_sizes=[10, 12], noise_sigma2=0.01, mean_profile=profile)
    g = simulate(design, seed=5).matrix
    assert np.abs(g[:10].mean(axis=0) - g[10:].mean(axis=0)).mean() == pytest.approx(2.0, abs=0.01)
    src = ArraySource(g)
    spec = eigen_decompose(accumulate_gram(src, build_standardizer(marker_stats(src))))
    assert spec.eigs[0] > 1.0
    assert np.all(spec.eigs[1:] <= 1e-8 * spec.eigs[0])


def test_determinism(four_group_design):
    small = SimulationDesign(p=300, group_sizes=[5, 6], frequency_range=(0.1, 0.9))
    np.testing.assert_array_equal(simulate(small, seed=3).matrix, simulate(small, seed=3).matrix)
    assert not np.array_equal(simulate(small, seed=3).matrix, simulate(small, seed=4).matrix)
    assert set(np.unique(simulate(small, seed=3).matrix)) <= {0, 1, 2}


def test_identity_blocks_reduce_to_uncorrelated():
    base = SimulationDesign(p=1000, group_sizes=[250, 250], frequency_range=(0.2, 0.8))
    ld = with_equicorrelated_ld(base, 0.0, 50)
    a = simulate_uncorrelated(base, seed=9).matrix
    b = simulate_block_ld(ld, seed=9).matrix
    np.testing.assert_array_equal(a, b)
    rng = np.random.default_rng(0)
    pairs = rng.choice(1000, size=(1000, 2))
    pairs = pairs[pairs[:, 0] != pairs[:, 1]]
    within = b[:250].astype(float)
    corr = [np.corrcoef(within[:, i], within[:, j])[0, 1] for i, j in pairs]
    assert abs(np.nanmean(corr)) < 0.05


def test_block_correlation_recovered_before_rounding():
    block = np.array([[1.0, 0.8], [0.8, 1.0]])
    design = SimulationDesign(
        p=2, group_sizes=[2000], noise_sigma2=0.5, mean_profile=np.ones((1, 2)), ld_blocks=[[block]]
    )
    latent, _ = latent_matrix(design, seed=21)
    noise = latent - 1.0
    assert np.corrcoef(noise.T)[0, 1] == pytest.approx(0.8, abs=0.03)
    assert noise.var(axis=0) == pytest.approx([0.5, 0.5], rel=0.1)


def test_group_permutation_permutes_rows_only():
    freqs = np.random.default_rng(1).uniform(0.1, 0.9, size=(3, 800))
    design = SimulationDesign(p=800, group_sizes=[10, 14, 12], frequencies=freqs, group_ids=[0, 1, 2])
    order = [2, 0, 1]
    permuted = SimulationDesign(
        p=800, group_sizes=[design.group_sizes[i] for i in order], frequencies=freqs[order], group_ids=order
    )
    a, b = simulate(design, seed=4), simulate(permuted, seed=4)
    rows_a = {tuple(r) for r in a.matrix}
    rows_b = {tuple(r) for r in b.matrix}
    assert rows_a == rows_b

    def spectrum(m):
        src = ArraySource(m)
        return eigen_decompose(accumulate_gram(src, build_standardizer(marker_stats(src)))).eigs

    np.testing.assert_allclose(spectrum(a.matrix), spectrum(b.matrix), rtol=1e-9)


def test_rounding_marginals():
    design = SimulationDesign(p=1000, group_sizes=[100], noise_sigma2=0.5, mean_profile=np.ones((1, 1000)))
    g = simulate(design, seed=8).matrix.ravel()
    sd = math.sqrt(0.5)
    expected = [normal_cdf(-0.5 / sd), normal_cdf(0.5 / sd) - normal_cdf(-0.5 / sd), 1 - normal_cdf(0.5 / sd)]
    observed = np.bincount(g, minlength=3) / g.size
    np.testing.assert_allclose(observed, expected, atol=0.02)


def test_design_json_round_trip(tmp_path):
    design = with_equicorrelated_ld(
        SimulationDesign(p=120, group_sizes=[3, 4], frequency_range=(0.05, 0.95), seed=17), 0.6, 50
    )
    path = tmp_path / "d.json"
    path.write_text(json.dumps(design_to_dict(design)))
    back = load_design(path)
    assert [b.shape[0] for b in back.ld_blocks[0]] == [50, 50, 20]
    np.testing.assert_array_equal(simulate(back).matrix, simulate(design).matrix)

    explicit = SimulationDesign(p=3, group_sizes=[2], mean_profile=np.array([[0.0, 1.0, 2.0]]))
    assert design_from_dict(json.loads(json.dumps(design_to_dict(explicit)))).mean_profile.tolist() == [[0, 1, 2]]


def test_design_errors(tmp_path):
    with pytest.raises(InvalidDesign):
        SimulationDesign(p=10, group_sizes=[0, 3], frequency_range=(0, 1)).validate()
    with pytest.raises(InvalidDesign):
        SimulationDesign(p=10, group_sizes=[3]).validate()
    with pytest.raises(InvalidDesign):
        SimulationDesign(p=2, group_sizes=[3], mean_profile=np.array([[0.0, 2.5]])).validate()
    with pytest.raises(BlockNotPSD):
        latent_matrix(with_equicorrelated_ld(SimulationDesign(p=3, group_sizes=[2], frequency_range=(0, 1)), -0.9, 3))
    with pytest.raises(BlockTilingMismatch):
        SimulationDesign(p=5, group_sizes=[2], frequency_range=(0, 1), ld_blocks=[[np.eye(3)]]).validate()
    with pytest.raises(InvalidDesign):
        SimulationDesign(p=2, group_sizes=[2], frequency_range=(0, 1), ld_blocks=[[2 * np.eye(2)]]).validate()
    with pytest.raises(InvalidDesign):
        simulate_uncorrelated(with_equicorrelated_ld(SimulationDesign(p=4, group_sizes=[2], frequency_range=(0, 1)), 0.5, 2))
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(InvalidDesign, match="line 1"):
        load_design(bad)
    bad.write_text(json.dumps({"p": 4, "group_sizes": [2], "means": {"kind": "mystery"}}))
    with pytest.raises(InvalidDesign):
        load_design(bad)


def test_tile_blocks_cover_p():
    blocks = tile_blocks(130, 50, equicorrelation_block(50, 0.3))
    assert sum(b.shape[0] for b in blocks) == 130
    assert blocks[-1].shape == (30, 30)
