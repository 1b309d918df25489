# src/tensorloc/core/selection.py
"""
Scale selection by repeated sample splitting.

For each of N random splits the rows are divided into n1 = floor(n/3) and
n - n1 observations; a candidate is scored by the norm of the difference
between the regularized first-part covariance and the raw second-part
covariance.  Scores are summed over splits and the smallest total wins.
The same splits are used for every candidate.
"""

from collections.abc import Callable, Sequence
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from loguru import logger

from tensorloc.core.errors import ConfigError, DomainError, ShapeError
from tensorloc.core.estimator import (
    as_data,
    band_1d,
    localization_weights,
    sample_covariance,
    taper_1d,
)
from tensorloc.core.lattice import LatticeSpec, scaling_vector, volume
from tensorloc.core.localfn import LocalizationFunction
from tensorloc.core.metrics import NORMS, matrix_norm
from tensorloc.core.model import argmin_tiebreak, lattice_box, make_rng

DEFAULT_SPLITS = 50
MIN_ROWS = 6
WEIGHT_CACHE_BYTES = 256 * 2**20
BANDWIDTH_GRID_POINTS = 40


# ============================================================
# Configuration
# ============================================================


@dataclass(frozen=True)
class SelectionConfig:
    candidates: tuple[tuple[int, ...], ...] | None = None
    splits: int = DEFAULT_SPLITS
    seed: int = 0
    norm: str = "l1"
    k_max: int | None = None

    def __post_init__(self):
        if int(self.splits) < 1:
            raise ConfigError("selection.splits must be >= 1")
        if self.norm not in NORMS:
            raise ConfigError(f"selection.norm must be one of {sorted(NORMS)}, got '{self.norm}'")
        if self.k_max is not None and int(self.k_max) < 1:
            raise ConfigError("selection.k_max must be >= 1")
        if self.candidates is not None:
            cands = tuple(tuple(int(x) for x in np.atleast_1d(k)) for k in self.candidates)
            if not cands:
                raise ConfigError("selection candidate grid is empty")
            object.__setattr__(self, "candidates", cands)
        object.__setattr__(self, "splits", int(self.splits))


def default_candidates(spec: LatticeSpec, n: int, k_max: int | None = None) -> list[tuple[int, ...]]:
    """Box 1..min(p_l, k_max) restricted to volumes V(k) <= n."""
    top = [p if k_max is None else min(p, int(k_max)) for p in spec.dims]
    grid = [k for k in lattice_box(top) if volume(k) <= n]
    return grid or [(1,) * spec.d]


def default_bandwidths(p: int, kind: str) -> list[int]:
    """Log-spaced 1-D widths: 0..p-1 for banding, even 2..p for tapering."""
    if kind == "banding":
        if p <= BANDWIDTH_GRID_POINTS:
            return list(range(p))
        raw = np.geomspace(1, p - 1, BANDWIDTH_GRID_POINTS)
        return sorted({0, *(int(round(x)) for x in raw)})
    if kind == "tapering":
        if p < 2:
            raise DomainError("tapering needs dimension >= 2")
        widths = range(2, p + 1, 2)
        if len(widths) <= BANDWIDTH_GRID_POINTS:
            return list(widths)
        raw = np.geomspace(2, p, BANDWIDTH_GRID_POINTS)
        return sorted({max(2, 2 * int(round(x / 2))) for x in raw if 2 * int(round(x / 2)) <= p})
    raise ConfigError(f"unknown 1-D estimator '{kind}' (expected banding or tapering)")


# ============================================================
# Splitting machinery
# ============================================================


def draw_splits(n: int, splits: int, seed: int) -> list[tuple[np.ndarray, np.ndarray]]:
    n1 = n // 3
    rng = make_rng(seed)
    out = []
    for _ in range(splits):
        perm = rng.permutation(n)
        out.append((np.sort(perm[:n1]), np.sort(perm[n1:])))
    return out


@dataclass
class SelectionResult:
    selected: tuple[int, ...] | int
    scores: pd.DataFrame
    per_split: np.ndarray = field(repr=False)


def select_by_splitting(
    data,
    candidates: Sequence[tuple[int, ...]],
    estimate: Callable[[np.ndarray, int], np.ndarray],
    cfg: SelectionConfig,
    labels: Sequence[str] | None = None,
) -> SelectionResult:
    """
    Score ``estimate(S1, candidate_index)`` against S2 over shared splits.

    Ties on the total score go to the smaller volume, then lexicographic order.
    """
    x = as_data(data)
    n = x.shape[0]
    if n < MIN_ROWS:
        raise DomainError(f"selection needs n >= {MIN_ROWS} observations, got {n}")
    if not candidates:
        raise ConfigError("selection candidate grid is empty")

    norm = matrix_norm(cfg.norm)
    ks = np.asarray(candidates, dtype=np.int64)
    per_split = np.empty((len(candidates), cfg.splits))

    for b, (idx1, idx2) in enumerate(draw_splits(n, cfg.splits, cfg.seed)):
        s1 = sample_covariance(x[idx1])
        s2 = sample_covariance(x[idx2])
        for c in range(len(candidates)):
            per_split[c, b] = norm(estimate(s1, c) - s2)

    totals = per_split.sum(axis=1)
    best = argmin_tiebreak(ks, totals)

    labels = labels or [f"k{ell + 1}" for ell in range(ks.shape[1])]
    scores = pd.DataFrame(ks, columns=list(labels))
    scores["score"] = totals
    scores["mean"] = per_split.mean(axis=1)
    scores["std"] = per_split.std(axis=1, ddof=1) if cfg.splits > 1 else 0.0

    selected = tuple(int(v) for v in ks[best])
    logger.debug(
        "selection over {} candidates x {} splits -> {} (score {:.6g})",
        len(candidates),
        cfg.splits,
        selected,
        totals[best],
    )
    return SelectionResult(selected=selected, scores=scores, per_split=per_split)


# ============================================================
# Public selectors
# ============================================================


def select_scaling(data, spec: LatticeSpec, h: LocalizationFunction, cfg: SelectionConfig) -> SelectionResult:
    """Choose k_h for the localization estimator with function h."""
    x = as_data(data)
    if x.shape[1] != spec.n_sites:
        raise ShapeError(f"data has {x.shape[1]} columns, lattice has {spec.n_sites} sites")
    if h.arity != spec.d:
        raise ShapeError(f"localization arity {h.arity} != lattice order {spec.d}")

    candidates = cfg.candidates or default_candidates(spec, x.shape[0], cfg.k_max)
    limits = h.scaling_limits(spec.dims)
    candidates = [scaling_vector(k, spec, limits) for k in candidates]

    cache: dict[int, np.ndarray] = {}
    cacheable = len(candidates) * spec.n_sites**2 * 8 <= WEIGHT_CACHE_BYTES

    def estimate(s1: np.ndarray, c: int) -> np.ndarray:
        weights = cache.get(c)
        if weights is None:
            weights = localization_weights(spec, h, candidates[c])
            if cacheable:
                cache[c] = weights
        return s1 * weights

    return select_by_splitting(x, candidates, estimate, cfg)


def select_bandwidth_1d(
    data,
    estimator: str,
    grid: Sequence[int] | None,
    cfg: SelectionConfig,
) -> SelectionResult:
    """Choose the width of the vectorized banding or tapering comparator."""
    x = as_data(data)
    p = x.shape[1]
    if estimator == "banding":
        fn = band_1d
    elif estimator == "tapering":
        fn = taper_1d
    else:
        raise ConfigError(f"unknown 1-D estimator '{estimator}' (expected banding or tapering)")

    widths = [int(k) for k in (grid if grid is not None else default_bandwidths(p, estimator))]
    if not widths:
        raise ConfigError("bandwidth grid is empty")

    result = select_by_splitting(
        x,
        [(k,) for k in widths],
        lambda s1, c: fn(s1, widths[c]),
        cfg,
        labels=["k"],
    )
    result.selected = result.selected[0]
    return result
