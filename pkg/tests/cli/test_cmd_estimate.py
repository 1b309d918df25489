import json

import numpy as np
import pytest
from click.testing import CliRunner

from tensorloc.cli._main import cli
from tensorloc.core.matrix_io import read_matrix, write_data, write_matrix
from tensorloc.core.model import sample_gaussian


@pytest.fixture
def files(in_tmp, spd):
    (in_tmp / "lat.json").write_text(json.dumps({"dims": [3, 4]}))
    (in_tmp / "band.json").write_text(json.dumps({"kind": "banding"}))
    write_matrix(spd, in_tmp / "s.csv")
    write_matrix(spd, in_tmp / "s.bin")
    write_data(sample_gaussian(spd, 60, 4), in_tmp / "x.csv")
    return in_tmp


def _estimate(*args):
    return CliRunner().invoke(cli, ["estimate", *args])


# ============================================================
# Fixed scaling
# ============================================================


def test_full_banding_returns_the_input(files, spd):
    result = _estimate("s.csv", "--lattice", "lat.json", "--h", "band.json", "--k", "3,4", "--out", "e.csv")

    assert result.exit_code == 0, result.output
    np.testing.assert_array_equal(read_matrix(files / "e.csv"), spd)


def test_unit_banding_keeps_the_diagonal(files, spd):
    result = _estimate("s.csv", "--lattice", "lat.json", "--h", "band.json", "--k", "1", "--out", "e.csv")

    assert result.exit_code == 0, result.output
    np.testing.assert_array_equal(read_matrix(files / "e.csv"), np.diag(np.diag(spd)))


def test_binary_round_trip_is_exact(files, spd):
    result = _estimate(
        "s.bin", "--lattice", "lat.json", "--h", "band.json", "--k", "3,4", "--out", "e.out", "--format", "bin"
    )

    assert result.exit_code == 0, result.output
    assert (files / "e.out").read_bytes() == (files / "s.bin").read_bytes()


def test_psd_output(files):
    result = _estimate("s.csv", "--lattice", "lat.json", "--k", "2,2", "--psd", "--out", "e.csv")

    assert result.exit_code == 0, result.output
    assert np.linalg.eigvalsh(read_matrix(files / "e.csv")).min() >= -1e-10


# ============================================================
# Selection
# ============================================================


def test_auto_from_data(files):
    result = _estimate("x.csv", "--data", "--lattice", "lat.json", "--splits", "5", "--out", "e.csv")

    assert result.exit_code == 0, result.output
    assert "selected k" in result.output
    assert read_matrix(files / "e.csv").shape == (12, 12)


def test_auto_needs_data(files):
    result = _estimate("s.csv", "--lattice", "lat.json", "--k", "auto", "--out", "e.csv")
    assert result.exit_code == 2


# ============================================================
# Failures
# ============================================================


def test_k_is_required_for_a_matrix(files):
    assert _estimate("s.csv", "--lattice", "lat.json", "--out", "e.csv").exit_code == 2


def test_wrong_k_arity(files):
    assert _estimate("s.csv", "--lattice", "lat.json", "--k", "1,2,3", "--out", "e.csv").exit_code == 2


def test_lattice_mismatch(files):
    (files / "lat5.json").write_text(json.dumps({"dims": [5]}))
    assert _estimate("s.csv", "--lattice", "lat5.json", "--k", "2", "--out", "e.csv").exit_code == 2


def test_precision_of_an_indefinite_matrix(files):
    write_matrix(np.array([[1.0, 2.0], [2.0, 1.0]]), files / "bad.csv")
    (files / "lat2.json").write_text(json.dumps({"dims": [2]}))

    result = _estimate(
        "bad.csv", "--lattice", "lat2.json", "--h", "band.json", "--k", "2", "--precision", "--out", "p.csv"
    )
    assert result.exit_code == 3
    assert not (files / "p.csv").exists()
