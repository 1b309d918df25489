# src/tensorloc/core/estimator.py
"""
Covariance estimators.

Every function takes and returns dense symmetric float64 arrays; inputs
are never modified.  Lattice-aware estimators index covariance rows by the
sites of a LatticeSpec (its active subset when irregular).
"""

from collections.abc import Sequence
from typing import NamedTuple

import numpy as np
import numpy.typing as npt
from loguru import logger
from scipy import linalg

from tensorloc.core.errors import ConvergenceError, DomainError, NumericalError, ShapeError
from tensorloc.core.lattice import LatticeSpec, pairwise_deltas, scaling_vector
from tensorloc.core.localfn import LocalizationFunction, eval_table

CovMatrix = npt.NDArray[np.float64]
DataMatrix = npt.NDArray[np.float64]


# ============================================================
# Input coercion
# ============================================================


def as_covariance(m, name: str = "matrix") -> CovMatrix:
    """Copy to a finite, exactly symmetric float64 square array."""
    m = np.array(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ShapeError(f"{name} must be square, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise DomainError(f"{name} has non-finite entries")
    return 0.5 * (m + m.T)


def as_data(x, name: str = "data") -> DataMatrix:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise ShapeError(f"{name} must be an n x p array, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise DomainError(f"{name} has non-finite entries")
    return x


def _check_lattice(m: CovMatrix, spec: LatticeSpec, h: LocalizationFunction | None = None):
    if m.shape[0] != spec.n_sites:
        raise ShapeError(f"matrix dimension {m.shape[0]} != lattice site count {spec.n_sites}")
    if h is not None and h.arity != spec.d:
        raise ShapeError(f"localization arity {h.arity} != lattice order {spec.d}")


# ============================================================
# Sample covariance
# ============================================================


def sample_covariance(data) -> CovMatrix:
    """Unbiased sample covariance (divisor n - 1) of the rows of ``data``."""
    x = as_data(data)
    n = x.shape[0]
    if n < 2:
        raise DomainError(f"sample covariance needs n >= 2 observations, got {n}")
    centered = x - x.mean(axis=0)
    s = centered.T @ centered / (n - 1)
    return 0.5 * (s + s.T)


# ============================================================
# Lattice localization
# ============================================================


def localization_weights(
    spec: LatticeSpec, h: LocalizationFunction, k_h: Sequence[int]
) -> np.ndarray:
    """Weight matrix W with W_ij = h(delta_ij / k_h)."""
    if h.arity != spec.d:
        raise ShapeError(f"localization arity {h.arity} != lattice order {spec.d}")
    k_h = scaling_vector(k_h, spec, h.scaling_limits(spec.dims))
    table = eval_table(h, k_h, spec.dims)
    deltas = pairwise_deltas(spec)
    return table[tuple(deltas[ell] for ell in range(spec.d))]


def localize(
    s,
    spec: LatticeSpec,
    h: LocalizationFunction,
    k_h: Sequence[int],
    psd: bool = False,
) -> CovMatrix:
    """Entry-wise product of S with h(delta_ij / k_h); optional PSD repair."""
    s = as_covariance(s, "S")
    _check_lattice(s, spec, h)
    out = s * localization_weights(spec, h, k_h)
    if psd:
        out = psd_project(out)
    return out


def multi_band(s, spec: LatticeSpec, k: Sequence[int]) -> CovMatrix:
    """Keep entries whose coordinate difference is strictly inside k, zero the rest."""
    s = as_covariance(s, "S")
    _check_lattice(s, spec)
    k = np.asarray(scaling_vector(k, spec))
    deltas = pairwise_deltas(spec)
    keep = np.all(deltas < k[:, None, None], axis=0)
    return np.where(keep, s, 0.0)


# ============================================================
# One-dimensional comparators (vectorized index)
# ============================================================


def band_1d(s, k: int) -> CovMatrix:
    """Keep entries with |i - j| <= k."""
    s = as_covariance(s, "S")
    p = s.shape[0]
    k = int(k)
    if not 0 <= k < p:
        raise DomainError(f"band width k={k} outside 0..{p - 1}")
    lag = np.abs(np.subtract.outer(np.arange(p), np.arange(p)))
    return np.where(lag <= k, s, 0.0)


def taper_1d(s, k: int) -> CovMatrix:
    """Scale entry (i, j) by phi(|i - j|; k/2, k)."""
    s = as_covariance(s, "S")
    k = int(k)
    if k < 2 or k % 2:
        raise DomainError(f"taper width must be an even integer >= 2, got {k}")
    p = s.shape[0]
    # every lag is on the plateau once k >= 2p
    spec = LatticeSpec(dims=(p,))
    return localize(s, spec, LocalizationFunction.tapering(1, 0.5), (min(k, 2 * p),))


# ============================================================
# Separable (Kronecker) comparator
# ============================================================


class KroneckerFactors(NamedTuple):
    sigma1: CovMatrix
    sigma2: CovMatrix


def nearest_kronecker(
    s_reg,
    p1: int,
    p2: int,
    iters: int = 5000,
    tol: float = 1e-12,
) -> KroneckerFactors:
    """
    Frobenius-nearest Sigma2 (x) Sigma1 to a p1*p2 square matrix.

    With dimension 1 fastest, S[(s1, s2), (t1, t2)] is rearranged into the
    p2^2 x p1^2 matrix R[(s2, t2), (s1, t1)]; the best Kronecker pair is the
    dominant singular pair of R, found by power iteration on R^T R started
    at vec(I).  Scale is fixed by trace(Sigma1) = p1.
    """
    s = as_covariance(s_reg, "S")
    p1, p2 = int(p1), int(p2)
    if p1 < 1 or p2 < 1 or s.shape[0] != p1 * p2:
        raise ShapeError(f"matrix dimension {s.shape[0]} != p1 * p2 = {p1 * p2}")

    r = s.reshape(p2, p1, p2, p1).transpose(0, 2, 1, 3).reshape(p2 * p2, p1 * p1)
    if not np.any(r):
        return KroneckerFactors(np.eye(p1), np.zeros((p2, p2)))

    def _iterate(v: np.ndarray) -> tuple[np.ndarray, int, float]:
        v = v / np.linalg.norm(v)
        change = np.inf
        for it in range(1, iters + 1):
            w = r.T @ (r @ v)
            norm = np.linalg.norm(w)
            if norm == 0.0:
                return v, it, np.inf
            w /= norm
            change = np.linalg.norm(w - v)
            v = w
            if change < tol:
                return v, it, change
        return v, iters, change

    v, used, change = _iterate(np.eye(p1).reshape(-1))
    if not change < tol:
        logger.warning(
            "nearest_kronecker: power iteration from vec(I) stalled (change={:.2e}); restarting",
            change,
        )
        v, used, change = _iterate(np.random.default_rng(0).standard_normal(p1 * p1))
        if not change < tol:
            raise ConvergenceError(
                "nearest Kronecker power iteration did not converge",
                iterations=used,
                residual=float(change),
            )

    u = r @ v
    a = v.reshape(p1, p1)
    b = u.reshape(p2, p2)
    a = 0.5 * (a + a.T)
    b = 0.5 * (b + b.T)

    tr = np.trace(a)
    if tr == 0.0:
        raise NumericalError("nearest Kronecker factor has zero trace; scale is undefined")
    a = a * (p1 / tr)
    b = b * (tr / p1)

    logger.debug(
        "nearest_kronecker: {} iterations, residual {:.3e}",
        used,
        np.linalg.norm(s - np.kron(b, a)),
    )
    return KroneckerFactors(a, b)


def separable_estimate(
    s,
    spec: LatticeSpec,
    h: LocalizationFunction,
    k_h: Sequence[int],
    iters: int = 5000,
    tol: float = 1e-12,
) -> CovMatrix:
    """Doubly banded/tapered S projected onto Kronecker products Sigma2 (x) Sigma1."""
    if spec.d != 2 or spec.is_irregular:
        raise ShapeError("separable estimate needs a regular 2-order lattice")
    regularized = localize(s, spec, h, k_h)
    p1, p2 = spec.dims
    sigma1, sigma2 = nearest_kronecker(regularized, p1, p2, iters=iters, tol=tol)
    return np.kron(sigma2, sigma1)


# ============================================================
# PSD repair and precision
# ============================================================


def psd_project(m, floor: float = 0.0) -> CovMatrix:
    """Clamp eigenvalues at ``floor``: the Frobenius-nearest matrix with spectrum >= floor."""
    m = as_covariance(m)
    if floor < 0:
        raise DomainError("eigenvalue floor must be non-negative")
    try:
        vals, vecs = linalg.eigh(m)
    except linalg.LinAlgError as e:
        raise NumericalError(f"eigendecomposition failed: {e}") from None
    if vals[0] >= floor:
        return m
    clipped = np.maximum(vals, floor)
    out = (vecs * clipped) @ vecs.T
    logger.debug(
        "psd_project: {} eigenvalues clamped (min was {:.3e})", int(np.sum(vals < floor)), vals[0]
    )
    return 0.5 * (out + out.T)


def precision(m, min_eig_guard: float = 1e-8) -> CovMatrix:
    """Inverse via Cholesky; refuses matrices whose smallest eigenvalue is below the guard."""
    m = as_covariance(m)
    lam_min = float(linalg.eigvalsh(m, subset_by_index=[0, 0])[0])
    if lam_min < min_eig_guard:
        raise NumericalError(
            f"matrix is not positive definite above the guard: "
            f"min eigenvalue {lam_min:.3e} < {min_eig_guard:.3e}"
        )
    try:
        factor = linalg.cho_factor(m, lower=True)
    except linalg.LinAlgError as e:
        raise NumericalError(f"Cholesky factorization failed: {e}") from None
    inv = linalg.cho_solve(factor, np.eye(m.shape[0]))
    return 0.5 * (inv + inv.T)
