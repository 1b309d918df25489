import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


@pytest.fixture
def spd(rng):
    """Random well-conditioned 12 x 12 covariance (a 3 x 4 lattice)."""
    a = rng.standard_normal((12, 12))
    m = a @ a.T / 12 + np.eye(12)
    return 0.5 * (m + m.T)


@pytest.fixture
def in_tmp(tmp_path, monkeypatch):
    """Run from an empty directory so only the packaged presets are composed."""
    monkeypatch.chdir(tmp_path)
    return tmp_path
