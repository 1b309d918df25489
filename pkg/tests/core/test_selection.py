import numpy as np
import pytest

from tensorloc.core.errors import ConfigError, DomainError, ShapeError
from tensorloc.core.lattice import LatticeSpec, volume
from tensorloc.core.localfn import LocalizationFunction
from tensorloc.core.model import gen_product_decay, sample_gaussian
from tensorloc.core.selection import (
    SelectionConfig,
    default_bandwidths,
    default_candidates,
    draw_splits,
    select_bandwidth_1d,
    select_by_splitting,
    select_scaling,
)

# ============================================================
# Configuration and grids
# ============================================================


def test_selection_config_validation():
    with pytest.raises(ConfigError):
        SelectionConfig(splits=0)
    with pytest.raises(ConfigError):
        SelectionConfig(norm="nuclear")
    with pytest.raises(ConfigError):
        SelectionConfig(candidates=())
    assert SelectionConfig(candidates=[3, (1, 2)]).candidates == ((3,), (1, 2))


def test_default_candidates_respect_volume():
    spec = LatticeSpec(dims=(6, 6))
    grid = default_candidates(spec, 10)
    assert grid
    assert all(volume(k) <= 10 for k in grid)
    assert (2, 5) in grid
    assert (3, 4) not in grid
    assert default_candidates(spec, 10, k_max=2) == [(1, 1), (1, 2), (2, 1), (2, 2)]


def test_default_bandwidths():
    assert default_bandwidths(10, "banding") == list(range(10))
    assert default_bandwidths(10, "tapering") == [2, 4, 6, 8, 10]

    wide = default_bandwidths(500, "tapering")
    assert len(wide) <= 40
    assert all(k % 2 == 0 and 2 <= k <= 500 for k in wide)
    with pytest.raises(ConfigError):
        default_bandwidths(10, "gc")


def test_splits_are_disjoint_thirds():
    splits = draw_splits(30, 5, seed=3)
    assert len(splits) == 5
    for first, second in splits:
        assert len(first) == 10
        assert len(second) == 20
        assert set(first).isdisjoint(second)
        assert set(first) | set(second) == set(range(30))

    again = draw_splits(30, 5, seed=3)
    for (a1, a2), (b1, b2) in zip(splits, again, strict=True):
        np.testing.assert_array_equal(a1, b1)
        np.testing.assert_array_equal(a2, b2)


# ============================================================
# Selection by splitting
# ============================================================


def _lattice_data(n=120, seed=1):
    spec = LatticeSpec(dims=(6, 5))
    sigma = gen_product_decay(spec, (2.0, 2.0))
    return spec, sample_gaussian(sigma, n, seed)


def test_ties_go_to_the_smallest_volume():
    x = np.random.default_rng(0).standard_normal((30, 4))
    cfg = SelectionConfig(splits=4)
    result = select_by_splitting(x, [(2, 2), (1, 3), (1, 1)], lambda s1, c: s1, cfg)
    assert result.selected == (1, 1)


def test_select_scaling_scores_every_candidate():
    spec, x = _lattice_data()
    cfg = SelectionConfig(splits=10, seed=4, k_max=3)
    result = select_scaling(x, spec, LocalizationFunction.tapering(2), cfg)

    assert list(result.scores.columns) == ["k1", "k2", "score", "mean", "std"]
    assert len(result.scores) == 9
    assert result.per_split.shape == (9, 10)
    assert result.selected in {tuple(row) for row in result.scores[["k1", "k2"]].to_numpy()}
    np.testing.assert_allclose(result.scores["score"], result.per_split.sum(axis=1))


def test_select_scaling_is_deterministic():
    spec, x = _lattice_data()
    cfg = SelectionConfig(splits=6, seed=9, k_max=4)
    h = LocalizationFunction.banding(2)
    assert select_scaling(x, spec, h, cfg).selected == select_scaling(x, spec, h, cfg).selected


def test_select_scaling_checks_inputs():
    spec, x = _lattice_data()
    with pytest.raises(ShapeError):
        select_scaling(x[:, :10], spec, LocalizationFunction.banding(2), SelectionConfig())
    with pytest.raises(DomainError):
        select_scaling(x[:5], spec, LocalizationFunction.banding(2), SelectionConfig())


def test_select_bandwidth_1d_returns_an_integer():
    _, x = _lattice_data()
    result = select_bandwidth_1d(x, "banding", [0, 1, 5, 10], SelectionConfig(splits=5))
    assert isinstance(result.selected, int)
    assert result.selected in {0, 1, 5, 10}

    with pytest.raises(ConfigError):
        select_bandwidth_1d(x, "gaspari-cohn", None, SelectionConfig(splits=5))


def test_select_scaling_accepts_tapering_widths_past_the_lattice():
    spec, x = _lattice_data()
    cfg = SelectionConfig(candidates=[(1, 1), (12, 10)], splits=4)
    result = select_scaling(x, spec, LocalizationFunction.tapering(2, c=0.5), cfg)
    assert len(result.scores) == 2

    with pytest.raises(ConfigError):
        select_scaling(x, spec, LocalizationFunction.banding(2), cfg)


def test_diagonal_truth_selects_the_unit_scale():
    spec = LatticeSpec(dims=(4, 5))
    scales = np.random.default_rng(5).uniform(0.5, 1.5, spec.size)
    sigma = np.diag(scales)
    h = LocalizationFunction.banding(2)

    hits = 0
    for rep in range(50):
        x = sample_gaussian(sigma, 500, rep)
        cfg = SelectionConfig(candidates=[(1, 1), spec.dims], splits=5, seed=rep)
        hits += select_scaling(x, spec, h, cfg).selected == (1, 1)

    assert hits >= 45


def test_selection_follows_relabeled_lattice_directions():
    spec = LatticeSpec(dims=(6, 5))
    x = sample_gaussian(gen_product_decay(spec, (0.5, 3.0)), 150, 11)
    # column-major index of (i, j) on the (5, 6) lattice holding coordinates swapped
    perm = np.arange(spec.size).reshape(spec.dims, order="F").T.reshape(-1, order="F")
    swapped = LatticeSpec(dims=(5, 6))
    h = LocalizationFunction.tapering(2, c=0.5)
    cfg = SelectionConfig(splits=8, seed=2, k_max=4)

    original = select_scaling(x, spec, h, cfg)
    relabeled = select_scaling(x[:, perm], swapped, h, cfg)

    assert relabeled.selected == original.selected[::-1]
    before = original.scores.set_index(["k1", "k2"])["score"]
    after = relabeled.scores.set_index(["k2", "k1"])["score"]
    after.index = after.index.set_names(["k1", "k2"])
    np.testing.assert_allclose(after.loc[before.index].to_numpy(), before.to_numpy(), rtol=1e-10)
