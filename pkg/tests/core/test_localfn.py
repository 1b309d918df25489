import numpy as np
import pytest

from tensorloc.core.errors import ConfigError, DomainError, ShapeError
from tensorloc.core.estimator import localize, multi_band
from tensorloc.core.lattice import LatticeSpec
from tensorloc.core.localfn import (
    KINDS,
    LocalizationFunction,
    eval_table,
    gaspari_cohn,
    qvol,
    vitali_variation,
    weight_array,
    weight_decomposition,
)

# ============================================================
# Gaspari-Cohn
# ============================================================


def test_gaspari_cohn_values():
    assert gaspari_cohn(0.0) == pytest.approx(1.0)
    assert gaspari_cohn(1.0) == pytest.approx(5.0 / 24.0)
    assert gaspari_cohn(2.0) == 0.0
    assert gaspari_cohn(3.5) == 0.0


def test_gaspari_cohn_branches_meet_at_one():
    left, right = gaspari_cohn(np.array([1.0 - 1e-9, 1.0 + 1e-9]))
    assert left == pytest.approx(right, abs=1e-7)


def test_gaspari_cohn_localization_uses_euclidean_norm():
    h = LocalizationFunction.gaspari_cohn(2)

    assert h([0.3, 0.4]) == pytest.approx(5.0 / 24.0)
    assert h([0.9, 0.9]) == 0.0
    assert not h.has_plateau


def test_scaling_limits_widen_only_for_tapering():
    dims = (10, 7)
    assert LocalizationFunction.tapering(2, c=0.5).scaling_limits(dims) == (20, 14)
    assert LocalizationFunction.tapering(2, c=(0.3, 0.75)).scaling_limits(dims) == (34, 10)
    assert LocalizationFunction.banding(2).scaling_limits(dims) == dims
    assert LocalizationFunction.gaspari_cohn(2).scaling_limits(dims) == dims
    with pytest.raises(ShapeError):
        LocalizationFunction.banding(2).scaling_limits((10,))


# ============================================================
# Evaluation
# ============================================================


def test_banding_is_strict_indicator():
    h = LocalizationFunction.banding(2)
    assert h([0.99, 0.5]) == 1.0
    assert h([1.0, 0.0]) == 0.0


def test_tapering_profile():
    h = LocalizationFunction.tapering(2, c=0.5)
    assert h([0.5, 0.0]) == 1.0
    assert h([0.75, 0.0]) == pytest.approx(0.5)
    assert h([0.75, 0.75]) == pytest.approx(0.25)
    assert h([1.0, 0.2]) == 0.0


def test_product_profile_interpolates():
    h = LocalizationFunction.product([(1.0, 0.5, 0.0)])
    assert h([0.25]) == pytest.approx(0.75)
    assert h([1.0]) == 0.0


def test_batch_evaluation_shape():
    h = LocalizationFunction.tapering(3)
    z = np.full((4, 5, 3), 0.1)
    assert h(z).shape == (4, 5)


def test_evaluation_errors():
    h = LocalizationFunction.banding(2)
    with pytest.raises(DomainError):
        h([-0.1, 0.0])
    with pytest.raises(ShapeError):
        h([0.1, 0.1, 0.1])


def test_invalid_functions_raise():
    with pytest.raises(ConfigError):
        LocalizationFunction("wiggly", 1)
    with pytest.raises(ConfigError):
        LocalizationFunction.tapering(1, c=1.0)
    with pytest.raises(ConfigError):
        LocalizationFunction.product([(1.0, 0.2, 0.6, 0.0)])
    with pytest.raises(ConfigError):
        LocalizationFunction.product([(0.9, 0.0)])


def test_kind_aliases():
    assert LocalizationFunction("gc", 2).kind == "gaspari-cohn"
    assert LocalizationFunction("multiplicative-banding", 1).kind == "banding"


def test_from_json_fills_arity():
    h = LocalizationFunction.from_json('{"kind": "tapering", "c": 0.25}', arity=3)
    assert h.arity == 3
    assert h.c == (0.25, 0.25, 0.25)
    assert LocalizationFunction.from_json(h.to_json()) == h


def test_eval_table_uses_scaled_grid():
    table = eval_table(LocalizationFunction.tapering(1, c=0.5), (4,), (6,))
    np.testing.assert_allclose(table, [1.0, 1.0, 1.0, 0.5, 0.0, 0.0])


# ============================================================
# Quasi-volume and variation
# ============================================================


def test_qvol_one_dimensional_is_increment():
    h = LocalizationFunction.tapering(1, c=0.5)
    assert qvol(h, [0.5], [1.0]) == pytest.approx(-1.0)
    assert qvol(h, [0.25], [0.25]) == pytest.approx(1.0)


def test_qvol_rejects_reversed_box():
    with pytest.raises(DomainError):
        qvol(LocalizationFunction.banding(1), [0.6], [0.4])


def test_vitali_variation_of_banding_is_one():
    assert vitali_variation(LocalizationFunction.banding(1), 8) == pytest.approx(1.0)


def test_vitali_variation_grows_under_refinement():
    h = LocalizationFunction.gaspari_cohn(2)
    assert vitali_variation(h, 4) <= vitali_variation(h, 8) + 1e-12
    with pytest.raises(DomainError):
        vitali_variation(h, 1)


# ============================================================
# Multi-banding decomposition
# ============================================================


def test_banding_decomposes_into_a_single_band():
    wm = weight_decomposition(LocalizationFunction.banding(2), (3, 4))
    assert dict(wm.items()) == {(3, 4): pytest.approx(1.0)}


@pytest.mark.parametrize(
    "h",
    [
        LocalizationFunction.tapering(2, c=0.5),
        LocalizationFunction.gaspari_cohn(2),
        LocalizationFunction.banding(2),
    ],
)
def test_weights_sum_to_one(h):
    assert weight_array(h, (3, 5)).sum() == pytest.approx(1.0)


def _random_h(kind: str, d: int, rng) -> LocalizationFunction:
    if kind == "tapering":
        return LocalizationFunction.tapering(d, c=tuple(rng.uniform(0.2, 0.8, d)))
    if kind == "product":
        profiles = []
        for _ in range(d):
            inner = np.sort(rng.uniform(0.0, 1.0, int(rng.integers(1, 4))))[::-1]
            profiles.append((1.0, *inner, 0.0))
        return LocalizationFunction.product(profiles)
    return LocalizationFunction(kind, d)


@pytest.mark.parametrize("kind", KINDS)
@pytest.mark.parametrize("d", [1, 2, 3])
def test_localization_is_weighted_sum_of_multi_bands(kind, d):
    rng = np.random.default_rng([d, KINDS.index(kind)])
    for _ in range(17):
        dims = tuple(int(x) for x in rng.integers(2, {1: 30, 2: 9, 3: 6}[d], size=d))
        spec = LatticeSpec(dims=dims)
        k_h = tuple(int(rng.integers(1, p + 1)) for p in dims)
        h = _random_h(kind, d, rng)
        a = rng.standard_normal((spec.size, spec.size))
        s = a @ a.T / spec.size

        rebuilt = np.zeros_like(s)
        for k, w in weight_decomposition(h, k_h).items():
            rebuilt += w * multi_band(s, spec, k)

        np.testing.assert_allclose(rebuilt, localize(s, spec, h, k_h), rtol=0, atol=1e-12)


def test_tapering_weights_are_non_negative():
    w = weight_array(LocalizationFunction.tapering(1, c=0.5), (8,))
    assert np.all(w >= -1e-15)
    assert w[:4].sum() == pytest.approx(0.0)
