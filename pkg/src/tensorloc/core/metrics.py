# src/tensorloc/core/metrics.py
"""
Matrix norms and reconstruction-error metrics.
"""

import math
from dataclasses import asdict, dataclass
from typing import NamedTuple

import numpy as np
from loguru import logger

from tensorloc.core.errors import ShapeError

BLOCK_SIZE = 16
DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 1000


# ============================================================
# Spectral norm
# ============================================================


class SpectralNormResult(NamedTuple):
    value: float
    iterations: int
    converged: bool


def _start_block(p: int, b: int, rng: np.random.Generator) -> np.ndarray:
    block = np.empty((p, b))
    block[:, 0] = 1.0 / math.sqrt(p)
    if b > 1:
        block[:, 1:] = rng.standard_normal((p, b - 1))
    q, _ = np.linalg.qr(block)
    return q


def spectral_norm_result(
    m,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> SpectralNormResult:
    """
    Largest absolute eigenvalue of a symmetric matrix.

    Block power iteration with a Rayleigh-Ritz step each sweep.  The start
    block is deterministic (a constant column plus a fixed-seed Gaussian
    block), so repeated calls give identical values.  A stagnating block
    (zero Ritz values on a non-zero matrix) is restarted from fresh draws.
    """
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ShapeError(f"spectral norm needs a square matrix, got shape {m.shape}")
    p = m.shape[0]
    if p == 0 or not np.any(m):
        return SpectralNormResult(0.0, 0, True)

    rng = np.random.default_rng(0)
    b = min(p, BLOCK_SIZE)
    q = _start_block(p, b, rng)

    value = 0.0
    restarts = 0
    for it in range(1, max_iter + 1):
        z = m @ q
        ritz = np.linalg.eigvalsh(q.T @ z)
        estimate = float(np.max(np.abs(ritz)))

        if estimate == 0.0 and restarts < 3:
            restarts += 1
            logger.warning("spectral_norm: block stagnated at zero, restarting ({})", restarts)
            q = _start_block(p, b, rng)
            continue

        if it > 1 and abs(estimate - value) <= tol * max(estimate, np.finfo(float).tiny):
            return SpectralNormResult(estimate, it, True)

        value = estimate
        q, _ = np.linalg.qr(z)

    return SpectralNormResult(value, max_iter, False)


def spectral_norm(m, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER) -> float:
    result = spectral_norm_result(m, tol=tol, max_iter=max_iter)
    if not result.converged:
        logger.warning(
            "spectral_norm: no convergence after {} iterations, best estimate {:.6g}",
            result.iterations,
            result.value,
        )
    return result.value


# ============================================================
# Other norms
# ============================================================


def frobenius_norm(m) -> float:
    m = np.asarray(m, dtype=np.float64)
    return math.sqrt(math.fsum((m * m).ravel()))


def l1_operator_norm(m, entrywise: bool = False) -> float:
    """Maximum absolute column sum; ``entrywise`` gives the sum of all |m_ij| instead."""
    a = np.abs(np.asarray(m, dtype=np.float64))
    if a.size == 0:
        return 0.0
    if entrywise:
        return math.fsum(a.ravel())
    return float(a.sum(axis=0).max())


def sign_hamming(x, y) -> float:
    """Fraction of positions where sign(x_i) != sign(y_i), with sign(0) = 0."""
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.shape != y.shape:
        raise ShapeError(f"sign_hamming needs equal lengths, got {x.size} and {y.size}")
    if x.size == 0:
        return 0.0
    return float(np.mean(np.sign(x) != np.sign(y)))


NORMS = {
    "spectral": spectral_norm,
    "frobenius": frobenius_norm,
    "l1": l1_operator_norm,
    "l1-entrywise": lambda m: l1_operator_norm(m, entrywise=True),
}


def matrix_norm(name: str):
    try:
        return NORMS[name]
    except KeyError:
        raise ShapeError(f"unknown norm '{name}' (expected one of {sorted(NORMS)})") from None


# ============================================================
# Error report
# ============================================================


@dataclass
class ErrorReport:
    spectral: float
    frobenius: float
    l1_operator: float
    spectral_converged: bool = True
    spectral_iterations: int = 0

    def as_dict(self) -> dict:
        return asdict(self)


def error_report(estimate, truth) -> ErrorReport:
    diff = np.asarray(estimate, dtype=np.float64) - np.asarray(truth, dtype=np.float64)
    spec = spectral_norm_result(diff)
    if not spec.converged:
        logger.warning("error_report: spectral norm not converged ({} iterations)", spec.iterations)
    return ErrorReport(
        spectral=spec.value,
        frobenius=frobenius_norm(diff),
        l1_operator=l1_operator_norm(diff),
        spectral_converged=spec.converged,
        spectral_iterations=spec.iterations,
    )
