import numpy as np
import pytest

from tensorloc.core.errors import ConfigError, ShapeError
from tensorloc.core.estimator import localize, sample_covariance
from tensorloc.core.lattice import LatticeSpec
from tensorloc.core.localfn import LocalizationFunction
from tensorloc.core.model import gen_product_decay, sample_gaussian
from tensorloc.core.pipeline import AUTO, EstimatorSpec, FitResult, fit, parse_estimators
from tensorloc.core.selection import SelectionConfig

LATTICE = LatticeSpec(dims=(4, 5))


@pytest.fixture
def truth():
    return gen_product_decay(LATTICE, (1.5, 1.5))


@pytest.fixture
def data(truth):
    return sample_gaussian(truth, 60, 3)


# ============================================================
# Specs
# ============================================================


def test_spec_from_dict():
    est = EstimatorSpec.from_dict(
        {"name": "proposed", "kind": "localize", "h": {"kind": "tapering", "c": 0.5}, "k": [2, 3]},
        LATTICE,
    )
    assert est.h == LocalizationFunction.tapering(2, c=0.5)
    assert est.k == (2, 3)
    assert not est.auto
    assert EstimatorSpec.from_dict(est.to_dict(), LATTICE) == est


def test_k_defaults_to_auto():
    assert EstimatorSpec("b", "band_1d").k == AUTO


def test_spec_validation():
    with pytest.raises(ConfigError):
        EstimatorSpec("x", "shrinkage")
    with pytest.raises(ConfigError):
        EstimatorSpec("x", "localize")
    with pytest.raises(ConfigError):
        EstimatorSpec("x", "band_1d", k="best")


def test_parse_estimators_needs_unique_names():
    items = [{"name": "s", "kind": "sample"}, {"name": "s", "kind": "identity"}]
    with pytest.raises(ConfigError):
        parse_estimators(items, LATTICE)
    with pytest.raises(ConfigError):
        parse_estimators([], LATTICE)


def test_selected_label():
    assert FitResult(np.eye(1), (2, 3)).selected_label == "2x3"
    assert FitResult(np.eye(1), 4).selected_label == "4"
    assert FitResult(np.eye(1)).selected_label == ""


# ============================================================
# Fitting
# ============================================================


def test_fit_sample_and_identity(data):
    s = sample_covariance(data)
    np.testing.assert_array_equal(fit(EstimatorSpec("s", "sample"), data, LATTICE).estimate, s)

    ident = fit(EstimatorSpec("i", "identity"), data, LATTICE).estimate
    np.testing.assert_allclose(ident, np.mean(np.diag(s)) * np.eye(20))


def test_fit_oracle(data, truth):
    out = fit(EstimatorSpec("o", "oracle"), data, LATTICE, truth=truth)
    np.testing.assert_array_equal(out.estimate, truth)
    with pytest.raises(ConfigError):
        fit(EstimatorSpec("o", "oracle"), data, LATTICE)


def test_fit_fixed_localization(data):
    h = LocalizationFunction.tapering(2)
    out = fit(EstimatorSpec("p", "localize", h=h, k=(2, 3)), data, LATTICE)
    np.testing.assert_array_equal(out.estimate, localize(sample_covariance(data), LATTICE, h, (2, 3)))
    assert out.selected == (2, 3)


def test_fit_auto_selects_within_grid(data):
    cfg = SelectionConfig(splits=5, seed=1, k_max=3)
    out = fit(EstimatorSpec("p", "localize", h=LocalizationFunction.banding(2)), data, LATTICE, selection=cfg)
    assert all(1 <= k <= 3 for k in out.selected)


def test_fit_grid_restricts_candidates(data):
    est = EstimatorSpec("p", "multi_band", grid=(2,))
    out = fit(est, data, LATTICE, selection=SelectionConfig(splits=3))
    assert out.selected == (2, 2)


def test_fit_one_dimensional_comparators(data):
    cfg = SelectionConfig(splits=3)
    band = fit(EstimatorSpec("b", "band_1d", k=3), data, LATTICE, selection=cfg)
    assert band.selected == 3
    taper = fit(EstimatorSpec("t", "taper_1d", grid=(4, 8)), data, LATTICE, selection=cfg)
    assert taper.selected in (4, 8)


def test_fit_separable_and_psd(data):
    est = EstimatorSpec("z", "separable", h=LocalizationFunction.tapering(2), k=(2, 2), psd=True)
    out = fit(est, data, LATTICE)
    assert np.linalg.eigvalsh(out.estimate).min() >= -1e-10


def test_fit_checks_columns(data):
    with pytest.raises(ShapeError):
        fit(EstimatorSpec("s", "sample"), data[:, :10], LATTICE)
