# src/tensorloc/core/pipeline.py
"""
Estimator registry: fit any supported covariance estimator by name.
"""

from collections.abc import Sequence
from dataclasses import dataclass, replace

import numpy as np
from loguru import logger

from tensorloc.core.errors import ConfigError, ShapeError
from tensorloc.core.estimator import (
    CovMatrix,
    as_data,
    band_1d,
    localize,
    multi_band,
    psd_project,
    sample_covariance,
    separable_estimate,
    taper_1d,
)
from tensorloc.core.lattice import LatticeSpec, scaling_vector
from tensorloc.core.localfn import LocalizationFunction
from tensorloc.core.selection import (
    SelectionConfig,
    default_candidates,
    select_bandwidth_1d,
    select_by_splitting,
    select_scaling,
)

ESTIMATOR_KINDS = (
    "sample",
    "band_1d",
    "taper_1d",
    "localize",
    "multi_band",
    "separable",
    "oracle",
    "identity",
)

AUTO = "auto"


@dataclass(frozen=True)
class EstimatorSpec:
    name: str
    kind: str
    h: LocalizationFunction | None = None
    k: tuple[int, ...] | int | str | None = None
    psd: bool = False
    grid: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.kind not in ESTIMATOR_KINDS:
            raise ConfigError(
                f"estimator '{self.name}': unknown kind '{self.kind}' (expected {ESTIMATOR_KINDS})"
            )
        needs_k = self.kind in ("band_1d", "taper_1d", "localize", "multi_band", "separable")
        if needs_k and self.k is None:
            object.__setattr__(self, "k", AUTO)
        if self.kind in ("localize", "separable") and self.h is None:
            raise ConfigError(f"estimator '{self.name}': kind '{self.kind}' needs a localization function 'h'")
        if isinstance(self.k, str) and self.k != AUTO:
            raise ConfigError(f"estimator '{self.name}': k must be an integer, a vector or '{AUTO}'")
        if isinstance(self.k, Sequence) and not isinstance(self.k, str):
            object.__setattr__(self, "k", tuple(int(x) for x in self.k))
        if self.grid is not None:
            object.__setattr__(self, "grid", tuple(int(x) for x in self.grid))

    @property
    def auto(self) -> bool:
        return self.k == AUTO

    @classmethod
    def from_dict(cls, data: dict, lattice: LatticeSpec) -> "EstimatorSpec":
        if "name" not in data or "kind" not in data:
            raise ConfigError("estimator entries need 'name' and 'kind'")
        h = data.get("h")
        if h is not None:
            h = LocalizationFunction.from_dict(dict(h), arity=lattice.d)
        k = data.get("k")
        if k is not None and not isinstance(k, (str, int)):
            k = tuple(k)
        grid = data.get("grid")
        return cls(
            name=str(data["name"]),
            kind=str(data["kind"]),
            h=h,
            k=k,
            psd=bool(data.get("psd", False)),
            grid=None if grid is None else tuple(grid),
        )

    def to_dict(self) -> dict:
        out: dict = {"name": self.name, "kind": self.kind, "psd": self.psd}
        if self.h is not None:
            out["h"] = self.h.to_dict()
        if self.k is not None:
            out["k"] = list(self.k) if isinstance(self.k, tuple) else self.k
        if self.grid is not None:
            out["grid"] = list(self.grid)
        return out


@dataclass
class FitResult:
    estimate: CovMatrix
    selected: tuple[int, ...] | int | None = None

    @property
    def selected_label(self) -> str:
        if self.selected is None:
            return ""
        if isinstance(self.selected, tuple):
            return "x".join(str(v) for v in self.selected)
        return str(self.selected)


def _one_d_width(est: EstimatorSpec, data: np.ndarray, selection: SelectionConfig, kind: str) -> int:
    if not est.auto:
        if isinstance(est.k, tuple):
            if len(est.k) != 1:
                raise ShapeError(f"estimator '{est.name}': 1-D width must be a single integer")
            return est.k[0]
        return int(est.k)
    return select_bandwidth_1d(data, kind, est.grid, selection).selected


def _lattice_k(
    est: EstimatorSpec,
    data: np.ndarray,
    lattice: LatticeSpec,
    h: LocalizationFunction,
    selection: SelectionConfig,
) -> tuple[int, ...]:
    if not est.auto:
        return scaling_vector(est.k, lattice, h.scaling_limits(lattice.dims))
    if est.grid is not None:
        selection = replace(selection, candidates=tuple((int(v),) * lattice.d for v in est.grid))
    return select_scaling(data, lattice, h, selection).selected


def fit(
    est: EstimatorSpec,
    data,
    lattice: LatticeSpec,
    truth: CovMatrix | None = None,
    selection: SelectionConfig | None = None,
) -> FitResult:
    """Estimate the covariance of ``data`` (rows = observations over the lattice sites)."""
    x = as_data(data)
    if x.shape[1] != lattice.n_sites:
        raise ShapeError(f"data has {x.shape[1]} columns, lattice has {lattice.n_sites} sites")
    selection = selection or SelectionConfig()

    if est.kind == "oracle":
        if truth is None:
            raise ConfigError(f"estimator '{est.name}': oracle needs the true covariance")
        return FitResult(np.array(truth, dtype=float))

    s = sample_covariance(x)
    selected = None

    if est.kind == "sample":
        out = s
    elif est.kind == "identity":
        out = float(np.mean(np.diag(s))) * np.eye(s.shape[0])
    elif est.kind == "band_1d":
        selected = _one_d_width(est, x, selection, "banding")
        out = band_1d(s, selected)
    elif est.kind == "taper_1d":
        selected = _one_d_width(est, x, selection, "tapering")
        out = taper_1d(s, selected)
    elif est.kind == "localize":
        selected = _lattice_k(est, x, lattice, est.h, selection)
        out = localize(s, lattice, est.h, selected)
    elif est.kind == "multi_band":
        h = LocalizationFunction.banding(lattice.d)
        selected = _lattice_k(est, x, lattice, h, selection)
        out = multi_band(s, lattice, selected)
    else:
        selected = _separable_k(est, x, lattice, selection)
        out = separable_estimate(s, lattice, est.h, selected)

    if est.psd:
        out = psd_project(out)

    logger.trace("fitted {} ({}) selected={}", est.name, est.kind, selected)
    return FitResult(out, selected)


def _separable_k(
    est: EstimatorSpec,
    data: np.ndarray,
    lattice: LatticeSpec,
    selection: SelectionConfig,
) -> tuple[int, ...]:
    limits = est.h.scaling_limits(lattice.dims)
    if not est.auto:
        return scaling_vector(est.k, lattice, limits)
    candidates = selection.candidates or default_candidates(lattice, data.shape[0], selection.k_max)
    candidates = [scaling_vector(k, lattice, limits) for k in candidates]
    result = select_by_splitting(
        data,
        candidates,
        lambda s1, c: separable_estimate(s1, lattice, est.h, candidates[c]),
        selection,
    )
    return result.selected


def parse_estimators(items, lattice: LatticeSpec) -> list[EstimatorSpec]:
    specs = [EstimatorSpec.from_dict(dict(item), lattice) for item in items]
    names = [e.name for e in specs]
    if len(set(names)) != len(names):
        raise ConfigError(f"estimator names must be unique, got {names}")
    if not specs:
        raise ConfigError("at least one estimator is required")
    return specs
