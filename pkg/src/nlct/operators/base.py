"""Abstract linear measurement operator interface.

Every operator maps R^n -> R^m linearly via ``apply`` and exposes the exact
adjoint via ``apply_transpose``.  Ray-transform operators are matrix-free;
``materialize`` builds the dense matrix for instances small enough to check
against the matrix-free path.
"""

import numpy as np

from ..exceptions import CapacityError

__all__ = ["LinearOperator", "apply", "apply_transpose", "MEMORY_BUDGET_ENTRIES"]

# Largest dense matrix (in float64 entries) the package will materialize.
MEMORY_BUDGET_ENTRIES = 2 ** 26


class LinearOperator:
    """Base class: subclasses set ``m``, ``n``, ``kind`` and implement ``_apply``/``_apply_transpose``."""

    m = 0
    n = 0
    kind = "abstract"

    @property
    def shape(self):
        return (self.m, self.n)

    @property
    def op_id(self):
        return f"{self.kind}(m={self.m},n={self.n})"

    def apply(self, x):
        x = np.ascontiguousarray(x, dtype=np.float64).ravel()
        if x.size != self.n:
            raise ValueError(f"apply expects length {self.n}, got {x.size}")
        return self._apply(x)

    def apply_transpose(self, r):
        r = np.ascontiguousarray(r, dtype=np.float64).ravel()
        if r.size != self.m:
            raise ValueError(f"apply_transpose expects length {self.m}, got {r.size}")
        return self._apply_transpose(r)

    def _apply(self, x):
        raise NotImplementedError

    def _apply_transpose(self, r):
        raise NotImplementedError

    def materialize(self, budget=MEMORY_BUDGET_ENTRIES):
        """Dense (m, n) matrix, built by adjoint probing of basis vectors."""
        if self.m * self.n > budget:
            raise CapacityError(
                f"dense {self.m}x{self.n} matrix exceeds budget of {budget} entries"
            )
        A = np.empty((self.m, self.n))
        e = np.zeros(self.m)
        for i in range(self.m):
            e[i] = 1.0
            A[i, :] = self._apply_transpose(e)
            e[i] = 0.0
        return A


class MatrixOperator(LinearOperator):
    """Wrap an explicit dense matrix in the operator interface."""

    kind = "dense"

    def __init__(self, matrix):
        A = np.ascontiguousarray(matrix, dtype=np.float64)
        if A.ndim != 2:
            raise ValueError("matrix must be 2D")
        self.matrix = A
        self.m, self.n = A.shape

    def _apply(self, x):
        return self.matrix @ x

    def _apply_transpose(self, r):
        return self.matrix.T @ r

    def materialize(self, budget=MEMORY_BUDGET_ENTRIES):
        return self.matrix.copy()


def apply(op, x):
    """Linear action ``A @ x`` of an operator."""
    return op.apply(x)


def apply_transpose(op, r):
    """Adjoint action ``A.T @ r`` of an operator."""
    return op.apply_transpose(r)
