# src/tensorloc/core/lattice.py
"""
Index arithmetic for d-order lattices.

Conventions
-----------
- Sites are vectorized mixed-radix with dimension 1 varying fastest
  (column-major / Fortran order over ``dims``).
- External coordinates are 1-based tuples, linear indices are 0-based.
- An irregular lattice is a regular one plus a sorted ``active`` subset
  of linear indices; estimators work on the active sites only.
"""

import json
import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from tensorloc.core.errors import ConfigError, LatticeIndexError, ShapeError

_MAX_SITES = np.iinfo(np.int64).max


# ============================================================
# Lattice description
# ============================================================


@dataclass(frozen=True)
class LatticeSpec:
    dims: tuple[int, ...]
    active: tuple[int, ...] | None = None

    def __post_init__(self):
        dims = tuple(int(p) for p in self.dims)
        if not dims:
            raise ConfigError("lattice must have at least one dimension")
        if any(p < 1 for p in dims):
            raise ConfigError(f"lattice dims must be positive, got {dims}")
        if math.prod(dims) > _MAX_SITES:
            raise ConfigError(f"lattice with dims {dims} is too large")
        object.__setattr__(self, "dims", dims)

        if self.active is not None:
            active = tuple(int(i) for i in self.active)
            if not active:
                raise ConfigError("active site set must not be empty")
            if any(b <= a for a, b in zip(active, active[1:], strict=False)):
                raise ConfigError("active site indices must be strictly increasing")
            if active[0] < 0 or active[-1] >= self.size:
                raise ConfigError(f"active site indices must lie in 0..{self.size - 1}")
            object.__setattr__(self, "active", active)

    # ------------------------------------------------------------
    @property
    def d(self) -> int:
        return len(self.dims)

    @property
    def size(self) -> int:
        """Number of sites p of the regular lattice."""
        return math.prod(self.dims)

    @property
    def n_sites(self) -> int:
        """Number of sites an estimate is indexed by (active subset if irregular)."""
        return self.size if self.active is None else len(self.active)

    @property
    def is_irregular(self) -> bool:
        return self.active is not None

    def site_indices(self) -> np.ndarray:
        if self.active is None:
            return np.arange(self.size, dtype=np.int64)
        return np.asarray(self.active, dtype=np.int64)

    def coords(self) -> np.ndarray:
        """1-based coordinates of the sites, shape (n_sites, d)."""
        return site_coords(self)

    # ------------------------------------------------------------
    def to_dict(self) -> dict:
        out: dict = {"dims": list(self.dims)}
        if self.active is not None:
            out["active"] = list(self.active)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "LatticeSpec":
        if "dims" not in data:
            raise ConfigError("lattice spec requires 'dims'")
        active = data.get("active")
        return cls(dims=tuple(data["dims"]), active=None if active is None else tuple(active))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "LatticeSpec":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError(f"lattice JSON line {e.lineno} column {e.colno}: {e.msg}") from None
        return cls.from_dict(data)


# ============================================================
# Index maps
# ============================================================


def _check_index(i: int, spec: LatticeSpec) -> int:
    i = int(i)
    if not 0 <= i < spec.size:
        raise LatticeIndexError(f"linear index {i} outside 0..{spec.size - 1}")
    return i


def index_to_coord(i: int, spec: LatticeSpec) -> tuple[int, ...]:
    i = _check_index(i, spec)
    zero_based = np.unravel_index(i, spec.dims, order="F")
    return tuple(int(s) + 1 for s in zero_based)


def coord_to_index(coord: Sequence[int], spec: LatticeSpec) -> int:
    if len(coord) != spec.d:
        raise ShapeError(f"coordinate {tuple(coord)} does not have arity {spec.d}")
    for s, p in zip(coord, spec.dims, strict=True):
        if not 1 <= int(s) <= p:
            raise LatticeIndexError(f"coordinate {tuple(coord)} outside lattice {spec.dims}")
    zero_based = tuple(int(s) - 1 for s in coord)
    return int(np.ravel_multi_index(zero_based, spec.dims, order="F"))


def delta(i: int, j: int, spec: LatticeSpec) -> tuple[int, ...]:
    """Absolute coordinate difference between two sites."""
    si = index_to_coord(i, spec)
    sj = index_to_coord(j, spec)
    return tuple(abs(a - b) for a, b in zip(si, sj, strict=True))


def in_kzone(d: Sequence[int], k: Sequence[int], strict: bool = False) -> bool:
    """
    Preserved k-zone membership.

    Non-strict: every delta_l <= k_l.  Strict: every delta_l < k_l.
    """
    if len(d) != len(k):
        raise ShapeError(f"delta arity {len(d)} != scaling arity {len(k)}")
    if strict:
        return all(a < b for a, b in zip(d, k, strict=True))
    return all(a <= b for a, b in zip(d, k, strict=True))


def embed_irregular(sites: Iterable[Sequence[int]]) -> LatticeSpec:
    """Smallest regular lattice containing ``sites`` with the sites marked active."""
    sites = [tuple(int(s) for s in site) for site in sites]
    if not sites:
        raise ConfigError("cannot embed an empty site set")

    arity = len(sites[0])
    if arity == 0 or any(len(s) != arity for s in sites):
        raise ShapeError("all sites must share the same positive arity")
    if any(c < 1 for s in sites for c in s):
        raise ConfigError("site coordinates must be positive")
    if len(set(sites)) != len(sites):
        raise ConfigError("duplicate site in irregular lattice")

    dims = tuple(max(s[ell] for s in sites) for ell in range(arity))
    full = LatticeSpec(dims=dims)
    active = sorted(coord_to_index(s, full) for s in sites)
    return LatticeSpec(dims=dims, active=tuple(active))


# ============================================================
# Scaling vectors
# ============================================================


def scaling_vector(
    k: int | Sequence[int], spec: LatticeSpec, limits: Sequence[int] | None = None
) -> tuple[int, ...]:
    """
    Validate k against the box 1 <= k_l <= limits_l (a scalar is broadcast).

    ``limits`` defaults to the lattice dims; plateau-tapering callers pass
    the wider box from LocalizationFunction.scaling_limits.
    """
    if np.isscalar(k):
        k = (int(k),) * spec.d
    k = tuple(int(x) for x in k)
    if len(k) != spec.d:
        raise ShapeError(f"scaling vector {k} does not have arity {spec.d}")
    top = spec.dims if limits is None else tuple(int(x) for x in limits)
    if len(top) != spec.d:
        raise ShapeError(f"scaling limits {top} do not have arity {spec.d}")
    if any(not 1 <= x <= t for x, t in zip(k, top, strict=True)):
        raise ConfigError(f"scaling vector {k} outside the box 1..{top}")
    return k


def volume(k: Sequence[int]) -> int:
    return math.prod(int(x) for x in k)


# ============================================================
# Cached site geometry
# ============================================================


@lru_cache(maxsize=32)
def site_coords(spec: LatticeSpec) -> np.ndarray:
    idx = spec.site_indices()
    coords = np.stack(np.unravel_index(idx, spec.dims, order="F"), axis=1) + 1
    coords.flags.writeable = False
    return coords


@lru_cache(maxsize=8)
def pairwise_deltas(spec: LatticeSpec) -> np.ndarray:
    """
    Absolute coordinate differences between all pairs of sites.

    Shape (d, n_sites, n_sites); read-only, shared between callers.
    """
    coords = site_coords(spec)
    dtype = np.min_scalar_type(max(spec.dims))
    out = np.empty((spec.d, spec.n_sites, spec.n_sites), dtype=dtype)
    for ell in range(spec.d):
        c = coords[:, ell]
        out[ell] = np.abs(c[:, None] - c[None, :])
    out.flags.writeable = False
    return out
