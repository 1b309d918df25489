# src/tensorloc/core/localfn.py
"""
Localization functions h on [0, 1]^d.

Shipped kinds
-------------
banding        prod_l 1{z_l < 1}
tapering       prod_l phi(z_l; c_l, 1), phi linear from 1 at c_l to 0 at 1
gaspari-cohn   GC(2 ||z||_2), compactly supported on ||z|| < 1, no plateau
product        prod_l h_l(z_l) with tabulated non-increasing profiles

A localization estimator multiplies entry (i, j) of the sample covariance
by h(delta_ij / k_h).  Any such estimator is a signed combination of
multi-banding estimators; ``weight_decomposition`` returns that combination.
"""

import itertools
import json
import math
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np
from loguru import logger

from tensorloc.core.errors import ConfigError, DomainError, ShapeError

KINDS = ("banding", "tapering", "gaspari-cohn", "product")

KIND_ALIASES = {
    "multiplicative-banding": "banding",
    "multiplicative-tapering": "tapering",
    "gaspari-cohn-l2": "gaspari-cohn",
    "gc": "gaspari-cohn",
    "product-of-profiles": "product",
}

PROFILE_CHECK_POINTS = 1000
PROFILE_TOL = 1e-9
WEIGHT_PRUNE = 1e-15


# ============================================================
# Gaspari-Cohn fifth-order piecewise rational function
# ============================================================


def gaspari_cohn(z: np.ndarray | float) -> np.ndarray:
    """GC(z) for z >= 0: support [0, 2), GC(0) = 1."""
    z = np.asarray(z, dtype=float)
    shape = z.shape
    z = z.reshape(-1)
    out = np.zeros_like(z)

    inner = z <= 1.0
    zi = z[inner]
    out[inner] = 1.0 - 5.0 / 3.0 * zi**2 + 5.0 / 8.0 * zi**3 + 0.5 * zi**4 - 0.25 * zi**5

    outer = (z > 1.0) & (z < 2.0)
    zo = z[outer]
    out[outer] = (
        -2.0 / (3.0 * zo)
        + 4.0
        - 5.0 * zo
        + 5.0 / 3.0 * zo**2
        + 5.0 / 8.0 * zo**3
        - 0.5 * zo**4
        + 1.0 / 12.0 * zo**5
    )
    return out.reshape(shape)


def taper_profile(z: np.ndarray, ka: float, kb: float) -> np.ndarray:
    """phi(z; ka, kb): 1 up to ka, linear down to 0 at kb, 0 beyond."""
    z = np.asarray(z, dtype=float)
    ramp = (kb - z) / (kb - ka)
    return np.where(z <= ka, 1.0, np.where(z <= kb, ramp, 0.0))


# ============================================================
# LocalizationFunction
# ============================================================


@dataclass(frozen=True)
class LocalizationFunction:
    kind: str
    arity: int
    c: tuple[float, ...] | None = None
    profiles: tuple[tuple[float, ...], ...] | None = field(default=None, repr=False)

    def __post_init__(self):
        kind = KIND_ALIASES.get(self.kind.lower(), self.kind.lower())
        if kind not in KINDS:
            raise ConfigError(f"unknown localization kind '{self.kind}' (expected one of {KINDS})")
        object.__setattr__(self, "kind", kind)

        if int(self.arity) < 1:
            raise ConfigError("localization function arity must be >= 1")
        object.__setattr__(self, "arity", int(self.arity))

        if kind == "tapering":
            c = self.c if self.c is not None else (0.5,) * self.arity
            if np.isscalar(c):
                c = (float(c),) * self.arity
            c = tuple(float(x) for x in c)
            if len(c) != self.arity:
                raise ShapeError(f"tapering needs {self.arity} plateau fractions, got {len(c)}")
            if any(not 0.0 < x < 1.0 for x in c):
                raise ConfigError(f"tapering plateau fractions must lie in (0, 1), got {c}")
            object.__setattr__(self, "c", c)
        elif self.c is not None:
            raise ConfigError(f"'{kind}' takes no plateau fractions")

        if kind == "product":
            if self.profiles is None or len(self.profiles) != self.arity:
                raise ShapeError(f"product localization needs {self.arity} profiles")
            profiles = tuple(tuple(float(v) for v in prof) for prof in self.profiles)
            for ell, prof in enumerate(profiles):
                _validate_profile(prof, ell)
            object.__setattr__(self, "profiles", profiles)
        elif self.profiles is not None:
            raise ConfigError(f"'{kind}' takes no profiles")

    # ------------------------------------------------------------
    @classmethod
    def banding(cls, arity: int) -> "LocalizationFunction":
        return cls("banding", arity)

    @classmethod
    def tapering(cls, arity: int, c: float | Sequence[float] = 0.5) -> "LocalizationFunction":
        return cls("tapering", arity, c=c)

    @classmethod
    def gaspari_cohn(cls, arity: int) -> "LocalizationFunction":
        return cls("gaspari-cohn", arity)

    @classmethod
    def product(cls, profiles: Sequence[Sequence[float]]) -> "LocalizationFunction":
        return cls("product", len(profiles), profiles=tuple(tuple(p) for p in profiles))

    @property
    def has_plateau(self) -> bool:
        return self.kind != "gaspari-cohn"

    def scaling_limits(self, dims: Sequence[int]) -> tuple[int, ...]:
        """
        Largest meaningful k_l per direction.

        Tapering keeps weight 1 up to c_l * k_l, so widths past p_l still
        change the estimate until ceil(p_l / c_l). Other kinds keep the box 1..p_l.
        """
        if len(dims) != self.arity:
            raise ShapeError(f"dims {tuple(dims)} do not have arity {self.arity}")
        if self.kind != "tapering":
            return tuple(int(p) for p in dims)
        return tuple(math.ceil(int(p) / c) for p, c in zip(dims, self.c, strict=True))

    # ------------------------------------------------------------
    def __call__(self, z) -> np.ndarray | float:
        return evaluate(self, z)

    def to_dict(self) -> dict:
        out: dict = {"kind": self.kind, "arity": self.arity}
        if self.c is not None:
            out["c"] = list(self.c)
        if self.profiles is not None:
            out["profiles"] = [list(p) for p in self.profiles]
        return out

    @classmethod
    def from_dict(cls, data: dict, arity: int | None = None) -> "LocalizationFunction":
        if "kind" not in data:
            raise ConfigError("localization function requires 'kind'")
        profiles = data.get("profiles")
        if profiles is not None:
            profiles = tuple(tuple(p) for p in profiles)
        n = data.get("arity", arity)
        if n is None:
            n = len(profiles) if profiles is not None else len(data.get("c") or ())
        if not n:
            raise ConfigError("localization function arity could not be determined")
        c = data.get("c")
        return cls(
            kind=str(data["kind"]),
            arity=int(n),
            c=None if c is None else tuple(c) if not np.isscalar(c) else c,
            profiles=profiles,
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str, arity: int | None = None) -> "LocalizationFunction":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError(
                f"localization JSON line {e.lineno} column {e.colno}: {e.msg}"
            ) from None
        return cls.from_dict(data, arity=arity)


def _validate_profile(values: tuple[float, ...], ell: int):
    if len(values) < 2:
        raise ConfigError(f"profile {ell} needs at least two tabulated values")
    if abs(values[0] - 1.0) > PROFILE_TOL:
        raise ConfigError(f"profile {ell} must equal 1 at z=0, got {values[0]}")

    z = np.linspace(0.0, 1.0, PROFILE_CHECK_POINTS)
    sampled = _interp_profile(values, z)
    if np.any(sampled < -PROFILE_TOL) or np.any(sampled > 1.0 + PROFILE_TOL):
        raise ConfigError(f"profile {ell} leaves [0, 1]")
    if np.any(np.diff(sampled) > PROFILE_TOL):
        raise ConfigError(f"profile {ell} is not non-increasing")


def _interp_profile(values: Sequence[float], z: np.ndarray) -> np.ndarray:
    grid = np.linspace(0.0, 1.0, len(values))
    return np.where(z < 1.0, np.interp(z, grid, values), 0.0)


# ============================================================
# Evaluation
# ============================================================


def evaluate(h: LocalizationFunction, z) -> np.ndarray | float:
    """
    h(z) for one point (shape (d,)) or a batch (shape (..., d)).

    Components must be non-negative; components >= 1 (or ||z|| >= 1 for
    Gaspari-Cohn) give weight 0.
    """
    z = np.asarray(z, dtype=float)
    single = z.ndim <= 1
    if z.ndim == 0:
        z = z.reshape(1)
    if z.shape[-1] != h.arity:
        raise ShapeError(f"point arity {z.shape[-1]} != localization arity {h.arity}")
    if np.any(z < 0) or np.any(np.isnan(z)):
        raise DomainError("localization function arguments must be non-negative")

    if h.kind == "banding":
        out = np.all(z < 1.0, axis=-1).astype(float)
    elif h.kind == "tapering":
        out = np.ones(z.shape[:-1])
        for ell, c in enumerate(h.c):
            out = out * taper_profile(z[..., ell], c, 1.0)
    elif h.kind == "gaspari-cohn":
        out = gaspari_cohn(2.0 * np.linalg.norm(z, axis=-1))
    else:
        out = np.ones(z.shape[:-1])
        for ell, prof in enumerate(h.profiles):
            out = out * _interp_profile(prof, z[..., ell])

    return float(out) if single else out


def eval_table(h: LocalizationFunction, k_h: Sequence[int], extent: Sequence[int]) -> np.ndarray:
    """
    Weights h(m / k_h) on the integer grid m_l = 0..extent_l - 1.

    All pairs sharing a coordinate difference share a weight, so estimators
    look entries up in this table instead of evaluating h per pair.
    """
    k_h = np.asarray(k_h, dtype=float)
    if k_h.shape != (h.arity,) or len(extent) != h.arity:
        raise ShapeError(f"scaling vector and extent must have arity {h.arity}")
    if np.any(k_h <= 0):
        raise DomainError("scaling vector entries must be positive")
    grids = np.meshgrid(*[np.arange(e, dtype=float) for e in extent], indexing="ij")
    points = np.stack(grids, axis=-1) / k_h
    return np.asarray(evaluate(h, points.reshape(-1, h.arity))).reshape(tuple(extent))


# ============================================================
# Quasi-volume and Vitali variation
# ============================================================


def qvol(h: LocalizationFunction, a: Sequence[float], b: Sequence[float]) -> float:
    """Alternating corner sum of h over the box [a, b]; collapsed directions use b only."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != (h.arity,) or b.shape != (h.arity,):
        raise ShapeError(f"box corners must have arity {h.arity}")
    if np.any(a > b):
        raise DomainError(f"box corner a={a.tolist()} exceeds b={b.tolist()}")

    moving = [ell for ell in range(h.arity) if a[ell] != b[ell]]
    total = 0.0
    for flips in itertools.product((0, 1), repeat=len(moving)):
        corner = b.copy()
        for ell, j in zip(moving, flips, strict=True):
            if j:
                corner[ell] = a[ell]
        total += (-1) ** sum(flips) * evaluate(h, corner)
    return float(total)


def _mixed_diff(table: np.ndarray) -> np.ndarray:
    out = table
    for axis in range(table.ndim):
        out = np.diff(out, axis=axis)
    return out


def vitali_variation(h: LocalizationFunction, resolution: int) -> float:
    """
    Grid lower bound on the Vitali variation of h.

    Sums |qvol| over the resolution^d cells of the uniform partition of [0, 1]^d.
    Refining the grid (e.g. doubling ``resolution``) never decreases the value.
    """
    n = int(resolution)
    if n < 2:
        raise DomainError("vitali_variation needs resolution >= 2")
    axis = np.linspace(0.0, 1.0, n + 1)
    grids = np.meshgrid(*([axis] * h.arity), indexing="ij")
    points = np.stack(grids, axis=-1).reshape(-1, h.arity)
    table = np.asarray(evaluate(h, points)).reshape((n + 1,) * h.arity)
    return float(np.abs(_mixed_diff(table)).sum())


# ============================================================
# Multi-banding weight decomposition
# ============================================================


@dataclass(frozen=True)
class WeightMap:
    """Weights w(k) over the integer box 1 <= k <= k_h (sparse: pruned entries omitted)."""

    entries: dict[tuple[int, ...], float]
    k_h: tuple[int, ...]

    def __len__(self) -> int:
        return len(self.entries)

    def items(self):
        return self.entries.items()

    def total(self) -> float:
        return float(sum(self.entries.values()))


def weight_array(h: LocalizationFunction, k_h: Sequence[int]) -> np.ndarray:
    """
    Dense weights, entry [k - 1] holding w(k) for 1 <= k <= k_h.

    w(k) = sum_{u in {0,1}^d} (-1)^|u| h((k - 1 + u) / k_h), i.e. (-1)^d times
    the mixed forward difference of the table h(m / k_h), m = 0..k_h.
    """
    k_h = tuple(int(x) for x in k_h)
    if len(k_h) != h.arity:
        raise ShapeError(f"scaling vector {k_h} does not have arity {h.arity}")
    if any(x < 1 for x in k_h):
        raise DomainError(f"scaling vector {k_h} must be positive")
    table = eval_table(h, k_h, [x + 1 for x in k_h])
    return (-1) ** h.arity * _mixed_diff(table)


def weight_decomposition(h: LocalizationFunction, k_h: Sequence[int]) -> WeightMap:
    w = weight_array(h, k_h)
    entries = {
        tuple(int(i) + 1 for i in idx): float(w[idx])
        for idx in zip(*np.nonzero(np.abs(w) >= WEIGHT_PRUNE), strict=True)
    }
    logger.debug("{} weight decomposition at k_h={}: {} non-zero weights", h.kind, k_h, len(entries))
    return WeightMap(entries=entries, k_h=tuple(int(x) for x in k_h))
