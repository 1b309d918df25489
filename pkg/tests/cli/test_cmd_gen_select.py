import json

import numpy as np
import pandas as pd
from click.testing import CliRunner

from tensorloc.cli._main import cli
from tensorloc.core.matrix_io import read_data, read_matrix, write_data
from tensorloc.core.model import GeneratorSpec, sample_gaussian

# ============================================================
# gen
# ============================================================


def test_gen_block_truth(in_tmp):
    result = CliRunner().invoke(cli, ["gen", "generator=setting2", "--out", "truth.csv"])

    assert result.exit_code == 0, result.output
    truth = read_matrix(in_tmp / "truth.csv")
    assert truth.shape == (200, 200)

    spec = GeneratorSpec.from_dict(json.loads((in_tmp / "truth.csv.generator.json").read_text()))
    assert spec.setting == "block-ar"
    np.testing.assert_array_equal(spec.build(), truth)


def test_gen_samples(in_tmp):
    result = CliRunner().invoke(cli, ["gen", "--out", "truth.bin", "--samples", "30", "--data-out", "x.csv"])

    assert result.exit_code == 0, result.output
    assert read_data(in_tmp / "x.csv").shape == (30, 64)


def test_gen_samples_need_a_destination(in_tmp):
    result = CliRunner().invoke(cli, ["gen", "--out", "truth.csv", "--samples", "30"])
    assert result.exit_code == 2


def test_gen_class_check(in_tmp):
    args = ["gen", "generator=product_decay", "--out", "t.bin", "--decay", "polynomial", "--param", "1", "--lag", "30"]
    result = CliRunner().invoke(cli, args)

    assert result.exit_code == 0, result.output
    assert "passes = True" in result.output
    assert "1-D tail at lag 30" in result.output


def test_gen_bad_override(in_tmp):
    result = CliRunner().invoke(cli, ["gen", "generator=nope", "--out", "t.csv"])
    assert result.exit_code == 2


# ============================================================
# select
# ============================================================


def _data(in_tmp, spd):
    (in_tmp / "lat.json").write_text(json.dumps({"dims": [3, 4]}))
    write_data(sample_gaussian(spd, 60, 8), in_tmp / "x.csv")


def test_select_writes_scores(in_tmp, spd):
    _data(in_tmp, spd)
    result = CliRunner().invoke(
        cli, ["select", "x.csv", "--lattice", "lat.json", "--splits", "5", "--out", "scores.csv"]
    )

    assert result.exit_code == 0, result.output
    assert "selected k = " in result.output
    scores = pd.read_csv(in_tmp / "scores.csv", comment="#")
    assert list(scores.columns) == ["k1", "k2", "score", "mean", "std"]
    assert len(scores) == 12


def test_select_vectorized_bandwidth(in_tmp, spd):
    _data(in_tmp, spd)
    result = CliRunner().invoke(cli, ["select", "x.csv", "--vectorized", "banding", "--splits", "5"])

    assert result.exit_code == 0, result.output
    assert "selected k = " in result.output


def test_select_lattice_mismatch(in_tmp, spd):
    _data(in_tmp, spd)
    (in_tmp / "lat.json").write_text(json.dumps({"dims": [5]}))
    result = CliRunner().invoke(cli, ["select", "x.csv", "--lattice", "lat.json"])
    assert result.exit_code == 2


def test_malformed_lattice_json(in_tmp, spd):
    _data(in_tmp, spd)
    (in_tmp / "lat.json").write_text('{"dims": [3, 4],}')
    result = CliRunner().invoke(cli, ["select", "x.csv", "--lattice", "lat.json"])
    assert result.exit_code == 2
