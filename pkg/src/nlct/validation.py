"""Input validation helpers shared by the estimators and the CLI."""

import numpy as np

from .operators import LinearOperator
from .operators.base import MatrixOperator

__all__ = ["as_operator", "check_measurements", "check_consistent"]


def as_operator(X):
    """Accept a LinearOperator or a 2D array; arrays are wrapped densely."""
    if isinstance(X, LinearOperator):
        return X
    A = np.asarray(X, dtype=np.float64)
    if A.ndim != 2:
        raise ValueError(f"expected a 2D measurement matrix, got shape {A.shape}")
    return MatrixOperator(A)


def check_measurements(y, allow_linearized=False):
    """Validate a measurement vector: finite, 1D; raw fractions must sit in [0, 1)."""
    values = np.asarray(getattr(y, "y", y), dtype=np.float64).ravel()
    if values.size == 0:
        raise ValueError("empty measurement vector")
    if not np.all(np.isfinite(values)):
        raise ValueError("measurements must be finite")
    if not allow_linearized and (values.min() < 0.0 or values.max() >= 1.0):
        raise ValueError("raw measurements must lie in [0, 1)")
    return values


def check_consistent(op, y):
    values = np.asarray(getattr(y, "y", y), dtype=np.float64).ravel()
    if values.size != op.m:
        raise ValueError(f"operator has {op.m} rows but y has {values.size} entries")
    return values
