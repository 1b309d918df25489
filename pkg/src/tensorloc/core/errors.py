# src/tensorloc/core/errors.py
"""
Exception hierarchy for TensorLoc.

Core modules raise these; the CLI translates them into exit codes
(2 for configuration / input problems, 3 for numerical failures).
"""


class TensorLocError(Exception):
    """Base class for all TensorLoc errors."""


class ConfigError(TensorLocError, ValueError):
    """Invalid configuration or input file."""


class ShapeError(TensorLocError, ValueError):
    """Dimension or arity mismatch between arrays, lattices and functions."""


class LatticeIndexError(TensorLocError, IndexError):
    """Linear index or coordinate outside the lattice."""


class NumericalError(TensorLocError, ArithmeticError):
    """Factorization failure or loss of definiteness."""


class ConvergenceError(NumericalError):
    """Iterative method stopped before reaching its tolerance."""

    def __init__(self, message: str, *, iterations: int, residual: float):
        super().__init__(f"{message} (iterations={iterations}, residual={residual:.3e})")
        self.iterations = iterations
        self.residual = residual


class DomainError(TensorLocError, ValueError):
    """Argument outside the domain of an operation (negative weight input, odd taper width, ...)."""
