import numpy as np
import pytest

from tensorloc.core.errors import ConfigError, LatticeIndexError, ShapeError
from tensorloc.core.lattice import (
    LatticeSpec,
    coord_to_index,
    delta,
    embed_irregular,
    in_kzone,
    index_to_coord,
    pairwise_deltas,
    scaling_vector,
    volume,
)

# ============================================================
# Index maps
# ============================================================


def test_dimension_one_varies_fastest():
    spec = LatticeSpec(dims=(3, 4))

    assert index_to_coord(0, spec) == (1, 1)
    assert index_to_coord(1, spec) == (2, 1)
    assert index_to_coord(3, spec) == (1, 2)
    assert index_to_coord(11, spec) == (3, 4)


def test_coord_to_index_inverts_index_to_coord():
    spec = LatticeSpec(dims=(3, 4, 2))
    for i in range(spec.size):
        assert coord_to_index(index_to_coord(i, spec), spec) == i


def test_delta_is_absolute_coordinate_difference():
    spec = LatticeSpec(dims=(3, 4))
    assert delta(0, 11, spec) == (2, 3)
    assert delta(11, 0, spec) == (2, 3)
    assert delta(5, 5, spec) == (0, 0)


def test_out_of_range_index_raises():
    spec = LatticeSpec(dims=(3, 4))
    with pytest.raises(LatticeIndexError):
        index_to_coord(12, spec)
    with pytest.raises(LatticeIndexError):
        coord_to_index((4, 1), spec)
    with pytest.raises(IndexError):
        index_to_coord(-1, spec)


def test_coordinate_arity_mismatch_raises():
    with pytest.raises(ShapeError):
        coord_to_index((1, 1, 1), LatticeSpec(dims=(3, 4)))


def test_pairwise_deltas_match_delta():
    spec = LatticeSpec(dims=(3, 4))
    deltas = pairwise_deltas(spec)

    assert deltas.shape == (2, 12, 12)
    assert not deltas.flags.writeable
    for i, j in [(0, 11), (4, 7), (2, 9)]:
        assert tuple(int(v) for v in deltas[:, i, j]) == delta(i, j, spec)


# ============================================================
# k-zones and scaling vectors
# ============================================================


def test_kzone_strict_and_non_strict():
    assert in_kzone((2, 3), (2, 3))
    assert not in_kzone((2, 3), (2, 3), strict=True)
    assert in_kzone((1, 2), (2, 3), strict=True)
    with pytest.raises(ShapeError):
        in_kzone((1,), (1, 2))


def test_scaling_vector_broadcasts_and_validates():
    spec = LatticeSpec(dims=(3, 4))

    assert scaling_vector(2, spec) == (2, 2)
    assert scaling_vector([3, 4], spec) == (3, 4)
    with pytest.raises(ConfigError):
        scaling_vector((4, 1), spec)
    with pytest.raises(ConfigError):
        scaling_vector((0, 1), spec)
    with pytest.raises(ShapeError):
        scaling_vector((1, 2, 3), spec)


def test_scaling_vector_with_wider_limits():
    spec = LatticeSpec(dims=(3, 4))

    assert scaling_vector((6, 8), spec, limits=(6, 8)) == (6, 8)
    with pytest.raises(ConfigError):
        scaling_vector((6, 9), spec, limits=(6, 8))
    with pytest.raises(ShapeError):
        scaling_vector((1, 1), spec, limits=(6,))


def test_volume():
    assert volume((2, 3, 4)) == 24


# ============================================================
# Lattice specs
# ============================================================


def test_invalid_lattices_raise():
    with pytest.raises(ConfigError):
        LatticeSpec(dims=())
    with pytest.raises(ConfigError):
        LatticeSpec(dims=(3, 0))
    with pytest.raises(ConfigError):
        LatticeSpec(dims=(3, 4), active=(2, 1))
    with pytest.raises(ConfigError):
        LatticeSpec(dims=(3, 4), active=(0, 12))


def test_embed_irregular_marks_active_sites():
    spec = embed_irregular([(3, 2), (1, 1)])

    assert spec.dims == (3, 2)
    assert spec.active == (0, 5)
    assert spec.n_sites == 2
    assert spec.size == 6
    assert spec.is_irregular
    np.testing.assert_array_equal(spec.coords(), [[1, 1], [3, 2]])


def test_embed_irregular_rejects_duplicates():
    with pytest.raises(ConfigError):
        embed_irregular([(1, 1), (1, 1)])


def test_lattice_json():
    spec = LatticeSpec(dims=(3, 4), active=(0, 4, 7))
    assert LatticeSpec.from_json(spec.to_json()) == spec


def test_malformed_lattice_json_reports_position():
    with pytest.raises(ConfigError, match="line 1"):
        LatticeSpec.from_json('{"dims": [3, 4}')
