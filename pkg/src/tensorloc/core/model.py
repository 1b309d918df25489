# src/tensorloc/core/model.py
"""
Covariance models: decay functions, optimal scaling, synthetic truths,
multi-bandable class diagnostics and random samplers.
"""

import itertools
import json
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
import pandas as pd
from loguru import logger
from scipy import linalg

from tensorloc.core.errors import ConfigError, DomainError, NumericalError, ShapeError
from tensorloc.core.estimator import CovMatrix, DataMatrix, as_covariance, psd_project
from tensorloc.core.lattice import LatticeSpec, pairwise_deltas, site_coords

EXHAUSTIVE_LIMIT = 10**6
AMPLITUDE_RANGE = (0.5, 1.5)
SAMPLER_JITTER = 1e-10

SeedLike = int | np.random.SeedSequence | np.random.Generator


# ============================================================
# Decay functions
# ============================================================

DECAY_FAMILIES = ("polynomial", "exponential")


@dataclass(frozen=True)
class DecaySpec:
    """
    Additive decay function tau(k) over a lattice box.

    polynomial  : sum_l [k_l^-alpha_l 1{0 < k_l < p_l} + 1{k_l = 0}]
    exponential : sum_l beta_l^-k_l 1{k_l < p_l}
    """

    family: str
    params: tuple[float, ...]
    dims: tuple[int, ...]

    def __post_init__(self):
        if self.family not in DECAY_FAMILIES:
            raise ConfigError(f"unknown decay family '{self.family}' (expected {DECAY_FAMILIES})")
        params = tuple(float(x) for x in self.params)
        dims = tuple(int(p) for p in self.dims)
        if len(params) != len(dims):
            raise ShapeError(f"{len(params)} decay parameters for a {len(dims)}-order lattice")
        if any(p < 1 for p in dims):
            raise ConfigError(f"lattice dims must be positive, got {dims}")
        if self.family == "polynomial" and any(a <= 0 for a in params):
            raise ConfigError(f"polynomial decay needs alpha > 0, got {params}")
        if self.family == "exponential" and any(b <= 1 for b in params):
            raise ConfigError(f"exponential decay needs beta > 1, got {params}")
        object.__setattr__(self, "params", params)
        object.__setattr__(self, "dims", dims)

    @property
    def d(self) -> int:
        return len(self.dims)

    def to_dict(self) -> dict:
        return {"family": self.family, "params": list(self.params), "dims": list(self.dims)}

    @classmethod
    def from_dict(cls, data: dict) -> "DecaySpec":
        try:
            return cls(data["family"], tuple(data["params"]), tuple(data["dims"]))
        except KeyError as e:
            raise ConfigError(f"decay spec is missing '{e.args[0]}'") from None


def decay_eval(tau: DecaySpec, k) -> np.ndarray | float:
    """tau(k) for one scaling vector or a batch of shape (..., d); k_l = 0 is allowed."""
    k = np.asarray(k)
    single = k.ndim == 1
    if k.shape[-1] != tau.d:
        raise ShapeError(f"scaling arity {k.shape[-1]} != decay arity {tau.d}")
    k = k.astype(float)
    p = np.asarray(tau.dims, dtype=float)
    par = np.asarray(tau.params)

    if tau.family == "polynomial":
        terms = np.where(k == 0, 1.0, np.where(k < p, np.maximum(k, 1.0) ** -par, 0.0))
    else:
        terms = np.where(k < p, par**-k, 0.0)

    out = terms.sum(axis=-1)
    return float(out) if single else out


# ============================================================
# Optimal scaling
# ============================================================


class OptimalScaling(NamedTuple):
    k: tuple[int, ...]
    value: float


def argmin_tiebreak(ks: np.ndarray, values: np.ndarray) -> int:
    """Row index of the minimum; ties go to smaller volume, then lexicographic order."""
    tied = np.flatnonzero(values == values.min())
    if tied.size == 1:
        return int(tied[0])
    sub = ks[tied]
    vol = np.prod(sub.astype(float), axis=1)
    keys = tuple(sub[:, ell] for ell in reversed(range(sub.shape[1]))) + (vol,)
    return int(tied[np.lexsort(keys)[0]])


def minimize_over_box(
    objective: Callable[[np.ndarray], np.ndarray],
    dims: Sequence[int],
    exhaustive_limit: int = EXHAUSTIVE_LIMIT,
) -> OptimalScaling:
    """
    Integer minimizer of a vectorized objective over 1 <= k_l <= p_l.

    Boxes up to ``exhaustive_limit`` points are scanned completely;
    larger boxes use coordinate descent from the corner, the far corner and
    the centre, each sweep scanning a full line (so p_l faces are always
    candidates).
    """
    dims = tuple(int(p) for p in dims)
    d = len(dims)

    if math.prod(dims) <= exhaustive_limit:
        ks = np.indices(dims).reshape(d, -1).T + 1
        values = np.asarray(objective(ks), dtype=float)
        i = argmin_tiebreak(ks, values)
        return OptimalScaling(tuple(int(x) for x in ks[i]), float(values[i]))

    starts = [
        np.ones(d, dtype=np.int64),
        np.asarray(dims, dtype=np.int64),
        np.asarray([max(1, p // 2) for p in dims], dtype=np.int64),
    ]
    found_k, found_v = [], []
    for k in starts:
        current = float(objective(k[None, :])[0])
        while True:
            moved = False
            for ell in range(d):
                line = np.repeat(k[None, :], dims[ell], axis=0)
                line[:, ell] = np.arange(1, dims[ell] + 1)
                vals = np.asarray(objective(line), dtype=float)
                i = argmin_tiebreak(line, vals)
                if vals[i] < current:
                    k, current, moved = line[i].copy(), float(vals[i]), True
            if not moved:
                break
        found_k.append(k)
        found_v.append(current)

    ks = np.stack(found_k)
    i = argmin_tiebreak(ks, np.asarray(found_v))
    return OptimalScaling(tuple(int(x) for x in ks[i]), float(found_v[i]))


def optimal_scaling(tau: DecaySpec, n: int) -> OptimalScaling:
    """argmin over the box of tau(k)^2 + V(k)/n, with the minimum value."""
    if int(n) < 1:
        raise DomainError("sample size n must be >= 1")

    def objective(ks: np.ndarray) -> np.ndarray:
        return decay_eval(tau, ks) ** 2 + np.prod(ks.astype(float), axis=1) / n

    result = minimize_over_box(objective, tau.dims)
    logger.debug("optimal_scaling({}, n={}) -> k*={}", tau.family, n, result.k)
    return result


def frobenius_scaling(alpha: Sequence[float], dims: Sequence[int], n: int) -> OptimalScaling:
    """argmin over the box of sum_l k_l^(-2 alpha_l - 1) 1{k_l < p_l} + V(k)/n."""
    alpha = np.asarray(alpha, dtype=float)
    p = np.asarray(dims, dtype=float)
    if alpha.shape != p.shape:
        raise ShapeError("alpha and dims must have the same length")
    if int(n) < 1:
        raise DomainError("sample size n must be >= 1")

    def objective(ks: np.ndarray) -> np.ndarray:
        k = ks.astype(float)
        bias = np.where(k < p, k ** (-2.0 * alpha - 1.0), 0.0).sum(axis=1)
        return bias + np.prod(k, axis=1) / n

    return minimize_over_box(objective, dims)


# ============================================================
# Synthetic covariance truths
# ============================================================


def draw_amplitudes(size: int, rng: np.random.Generator, bounds=AMPLITUDE_RANGE) -> np.ndarray:
    """Per-site variances a_i ~ Unif(bounds)."""
    return rng.uniform(bounds[0], bounds[1], size=size)


def _amplitude_outer(a, p: int) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.shape != (p,):
        raise ShapeError(f"amplitude vector has length {a.size}, expected {p}")
    if np.any(a <= 0) or not np.all(np.isfinite(a)):
        raise DomainError("amplitudes must be positive and finite")
    root = np.sqrt(a)
    return np.outer(root, root)


def gen_setting1(spec: LatticeSpec, a, length_scales: Sequence[float] | None = None) -> CovMatrix:
    """sigma_ij = sqrt(a_i a_j) exp(-||(s_i - s_j) / length||^2 / 2)."""
    coords = site_coords(spec).astype(float)
    if length_scales is not None:
        scales = np.asarray(length_scales, dtype=float)
        if scales.shape != (spec.d,) or np.any(scales <= 0):
            raise ConfigError(f"length scales must be {spec.d} positive values")
        coords = coords / scales
    sq = np.zeros((spec.n_sites, spec.n_sites))
    for ell in range(spec.d):
        c = coords[:, ell]
        sq += (c[:, None] - c[None, :]) ** 2
    out = _amplitude_outer(a, spec.n_sites) * np.exp(-0.5 * sq)
    return 0.5 * (out + out.T)


def gen_setting2(p1: int, p2: int) -> CovMatrix:
    """
    Block diagonal truth on a (p1, p2) lattice.

    Block k = 1..p2 (sites sharing the second coordinate) is 2 r_k^|i-j| with
    r_k = k / p2, a bounded AR(1)-type block.
    """
    p1, p2 = int(p1), int(p2)
    if p1 < 1 or p2 < 1:
        raise ConfigError("block sizes must be positive")
    lags = np.arange(p1)
    blocks = [linalg.toeplitz(2.0 * (k / p2) ** lags) for k in range(1, p2 + 1)]
    return linalg.block_diag(*blocks)


def _lag_factors(spec: LatticeSpec, fn: Callable[[np.ndarray, int], np.ndarray]) -> np.ndarray:
    deltas = pairwise_deltas(spec)
    out = np.ones((spec.n_sites, spec.n_sites))
    for ell in range(spec.d):
        out *= fn(deltas[ell].astype(float), ell)
    return out


def gen_setting3(spec: LatticeSpec, a, alpha: Sequence[float], project: bool = True) -> CovMatrix:
    """
    sigma_ij = sqrt(a_i a_j) prod_l f_l(delta_l) with f_l(0) = 1 and
    f_l(delta) = delta^(-alpha_l - 1) otherwise; PSD-projected unless ``project`` is off.
    """
    if spec.d != 3:
        raise ShapeError(f"setting 3 needs a 3-order lattice, got order {spec.d}")
    alpha = np.asarray(alpha, dtype=float)
    if alpha.shape != (3,) or np.any(alpha <= 0):
        raise ConfigError("setting 3 needs three positive decay exponents")

    def factor(dl: np.ndarray, ell: int) -> np.ndarray:
        return np.where(dl == 0, 1.0, np.maximum(dl, 1.0) ** (-alpha[ell] - 1.0))

    out = _amplitude_outer(a, spec.n_sites) * _lag_factors(spec, factor)
    out = 0.5 * (out + out.T)
    return psd_project(out) if project else out


def gen_product_decay(spec: LatticeSpec, alpha: Sequence[float]) -> CovMatrix:
    """sigma_ij = prod_l (1 + delta_l)^(-alpha_l - 1): bandable on the lattice, not in vectorized order."""
    alpha = np.asarray(alpha, dtype=float)
    if alpha.shape != (spec.d,) or np.any(alpha <= 0):
        raise ConfigError(f"product decay needs {spec.d} positive exponents")
    out = _lag_factors(spec, lambda dl, ell: (1.0 + dl) ** (-alpha[ell] - 1.0))
    return 0.5 * (out + out.T)


SETTINGS = ("gauss-kernel", "block-ar", "product-poly", "product-decay")

SETTING_ALIASES = {
    "setting1": "gauss-kernel",
    "setting2": "block-ar",
    "setting3": "product-poly",
    "eddy": "gauss-kernel",
}


@dataclass(frozen=True)
class GeneratorSpec:
    """Frozen description of a synthetic truth, amplitudes included once drawn."""

    setting: str
    lattice: LatticeSpec
    a: tuple[float, ...] | None = field(default=None, repr=False)
    alpha: tuple[float, ...] | None = None
    length_scales: tuple[float, ...] | None = None

    def __post_init__(self):
        setting = SETTING_ALIASES.get(self.setting, self.setting)
        if setting not in SETTINGS:
            raise ConfigError(f"unknown generator setting '{self.setting}' (expected {SETTINGS})")
        object.__setattr__(self, "setting", setting)
        if setting == "block-ar" and (self.lattice.d != 2 or self.lattice.is_irregular):
            raise ConfigError("block-ar truth needs a regular 2-order lattice (p1, p2)")
        if setting in ("product-poly", "product-decay") and self.alpha is None:
            raise ConfigError(f"'{setting}' needs decay exponents 'alpha'")
        for name in ("a", "alpha", "length_scales"):
            value = getattr(self, name)
            if value is not None:
                object.__setattr__(self, name, tuple(float(x) for x in value))

    @property
    def needs_amplitudes(self) -> bool:
        return self.setting in ("gauss-kernel", "product-poly")

    def with_amplitudes(self, rng: np.random.Generator) -> "GeneratorSpec":
        """Draw and freeze a_i once; a spec that already holds amplitudes is returned as is."""
        if not self.needs_amplitudes or self.a is not None:
            return self
        a = draw_amplitudes(self.lattice.n_sites, rng)
        return GeneratorSpec(self.setting, self.lattice, tuple(a), self.alpha, self.length_scales)

    def build(self) -> CovMatrix:
        if self.needs_amplitudes and self.a is None:
            raise ConfigError("amplitudes must be drawn (with_amplitudes) before building the truth")
        if self.setting == "gauss-kernel":
            return gen_setting1(self.lattice, self.a, self.length_scales)
        if self.setting == "block-ar":
            return gen_setting2(*self.lattice.dims)
        if self.setting == "product-poly":
            return gen_setting3(self.lattice, self.a, self.alpha)
        return gen_product_decay(self.lattice, self.alpha)

    def to_dict(self) -> dict:
        out: dict = {"setting": self.setting, "lattice": self.lattice.to_dict()}
        for name in ("a", "alpha", "length_scales"):
            value = getattr(self, name)
            if value is not None:
                out[name] = list(value)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "GeneratorSpec":
        if "setting" not in data or "lattice" not in data:
            raise ConfigError("generator spec needs 'setting' and 'lattice'")
        return cls(
            setting=str(data["setting"]),
            lattice=LatticeSpec.from_dict(dict(data["lattice"])),
            a=data.get("a"),
            alpha=data.get("alpha"),
            length_scales=data.get("length_scales"),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


# ============================================================
# Multi-bandable class diagnostics
# ============================================================


def tail_sum_1d(sigma, lag: int) -> float:
    """max_j sum_{|i - j| >= lag} |sigma_ij| in vectorized order."""
    a = np.abs(np.asarray(sigma, dtype=float))
    p = a.shape[0]
    far = np.abs(np.subtract.outer(np.arange(p), np.arange(p))) >= int(lag)
    return float(np.where(far, a, 0.0).sum(axis=0).max()) if p else 0.0


def tail_sum(sigma, spec: LatticeSpec, k: Sequence[int]) -> float:
    """max_j sum over sites outside the (non-strict) k-zone of |sigma_ij|."""
    k = np.asarray(k)
    if k.shape != (spec.d,):
        raise ShapeError(f"scaling vector must have arity {spec.d}")
    outside = np.any(pairwise_deltas(spec) > k[:, None, None], axis=0)
    return float(np.where(outside, np.abs(sigma), 0.0).sum(axis=0).max())


@dataclass
class ClassReport:
    tails: pd.DataFrame
    constant: float
    lambda_min: float
    lambda_max: float
    lag_tails: dict[int, float] = field(default_factory=dict)

    @property
    def passes(self) -> bool:
        return bool(self.tails["passes"].all())


def class_check(
    sigma,
    spec: LatticeSpec,
    tau: DecaySpec,
    sample_ks: Sequence[Sequence[int]],
    lags: Sequence[int] = (),
    constant: float | None = None,
) -> ClassReport:
    """
    Compare the column tail sums of sigma against tau on sampled scalings.

    Without an explicit ``constant`` the smallest C with tail(k) <= C tau(k)
    over the samples is fitted; a sample then fails only when tau(k) = 0
    while mass remains outside the zone.
    """
    sigma = as_covariance(sigma, "sigma")
    if sigma.shape[0] != spec.n_sites:
        raise ShapeError(f"matrix dimension {sigma.shape[0]} != lattice site count {spec.n_sites}")
    if tau.dims != spec.dims:
        raise ShapeError(f"decay dims {tau.dims} != lattice dims {spec.dims}")

    rows = []
    for k in sample_ks:
        k = tuple(int(x) for x in k)
        rows.append((*k, tail_sum(sigma, spec, k), decay_eval(tau, k)))
    columns = [f"k{ell + 1}" for ell in range(spec.d)] + ["tail", "tau"]
    tails = pd.DataFrame(rows, columns=columns)

    if constant is None:
        positive = tails["tau"] > 0
        ratios = tails.loc[positive, "tail"] / tails.loc[positive, "tau"]
        constant = float(ratios.max()) if len(ratios) else 0.0

    slack = 1e-12 * max(1.0, float(np.abs(sigma).max()))
    tails["passes"] = tails["tail"] <= constant * tails["tau"] + slack

    eig = linalg.eigvalsh(sigma)
    report = ClassReport(
        tails=tails,
        constant=constant,
        lambda_min=float(eig[0]),
        lambda_max=float(eig[-1]),
        lag_tails={int(lag): tail_sum_1d(sigma, lag) for lag in lags},
    )
    logger.debug(
        "class_check: constant={:.4g}, eigenvalues [{:.4g}, {:.4g}], passes={}",
        report.constant,
        report.lambda_min,
        report.lambda_max,
        report.passes,
    )
    return report


# ============================================================
# Samplers
# ============================================================


def make_rng(seed: SeedLike) -> np.random.Generator:
    """Counter-based (Philox) generator for an integer seed or SeedSequence."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.Philox(seed))


def _sampling_factor(sigma: CovMatrix) -> np.ndarray:
    try:
        return linalg.cholesky(sigma, lower=True)
    except linalg.LinAlgError:
        pass
    jitter = SAMPLER_JITTER * max(float(np.mean(np.diag(sigma))), 1.0)
    logger.debug("sampler: Cholesky failed, retrying with jitter {:.1e}", jitter)
    try:
        return linalg.cholesky(sigma + jitter * np.eye(sigma.shape[0]), lower=True)
    except linalg.LinAlgError:
        raise NumericalError("covariance is not positive semidefinite; Cholesky failed after jitter") from None


def sample_gaussian(sigma, n: int, seed: SeedLike) -> DataMatrix:
    """n i.i.d. N(0, sigma) rows."""
    sigma = as_covariance(sigma, "sigma")
    n = int(n)
    if n < 1:
        raise DomainError("number of samples must be >= 1")
    p = sigma.shape[0]
    if not np.any(sigma):
        return np.zeros((n, p))
    factor = _sampling_factor(sigma)
    z = make_rng(seed).standard_normal((n, p))
    return z @ factor.T


def sample_t(sigma, dof: float, n: int, seed: SeedLike) -> DataMatrix:
    """Multivariate t rows rescaled so that their covariance is sigma."""
    if dof <= 2:
        raise DomainError(f"t sampler needs dof > 2 for a finite covariance, got {dof}")
    sigma = as_covariance(sigma, "sigma")
    n = int(n)
    if n < 1:
        raise DomainError("number of samples must be >= 1")
    p = sigma.shape[0]
    if not np.any(sigma):
        return np.zeros((n, p))
    rng = make_rng(seed)
    factor = _sampling_factor(sigma)
    z = rng.standard_normal((n, p)) @ factor.T
    w = rng.chisquare(dof, size=n)
    return z / np.sqrt(w / dof)[:, None] * math.sqrt((dof - 2.0) / dof)


DISTRIBUTIONS = ("gaussian", "t")


def sample(sigma, n: int, seed: SeedLike, distribution: str = "gaussian", dof: float = 10.0):
    if distribution == "gaussian":
        return sample_gaussian(sigma, n, seed)
    if distribution == "t":
        return sample_t(sigma, dof, n, seed)
    raise ConfigError(f"unknown distribution '{distribution}' (expected {DISTRIBUTIONS})")


def lattice_box(dims: Sequence[int]) -> list[tuple[int, ...]]:
    """All scaling vectors of the box 1..p_l, in lexicographic order."""
    return list(itertools.product(*[range(1, p + 1) for p in dims]))
