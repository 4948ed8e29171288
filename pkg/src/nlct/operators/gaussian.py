"""Dense i.i.d. standard-normal measurement operator.

Rows are generated from counter-based streams keyed by (seed, row index),
so row i is reproducible on its own and the full matrix is identical no
matter how generation is scheduled.
"""

import numpy as np

from ..exceptions import CapacityError
from .base import LinearOperator, MEMORY_BUDGET_ENTRIES

__all__ = ["GaussianOperator", "gaussian_operator", "gaussian_row"]

# Counter stride between per-row streams; any row consumes far fewer draws.
_ROW_STRIDE = 2 ** 40


def gaussian_row(seed, i, n):
    """Row i of the (seed, m, n) Gaussian ensemble, independent of all other rows."""
    bg = np.random.Philox(key=np.uint64(seed)).advance(i * _ROW_STRIDE)
    return np.random.Generator(bg).standard_normal(n)


class GaussianOperator(LinearOperator):
    """m x n matrix with N(0, 1) entries, deterministic given ``seed``."""

    kind = "gaussian"

    def __init__(self, m, n, seed=0, budget=MEMORY_BUDGET_ENTRIES):
        m, n = int(m), int(n)
        if m < 1 or n < 1:
            raise ValueError("operator dimensions must be >= 1")
        if m * n > budget:
            raise CapacityError(
                f"gaussian {m}x{n} matrix exceeds budget of {budget} entries"
            )
        self.m, self.n, self.seed = m, n, int(seed)
        A = np.empty((m, n))
        for i in range(m):
            A[i, :] = gaussian_row(self.seed, i, n)
        self.matrix = A

    @property
    def op_id(self):
        return f"gaussian(m={self.m},n={self.n},seed={self.seed})"

    def _apply(self, x):
        return self.matrix @ x

    def _apply_transpose(self, r):
        return self.matrix.T @ r

    def materialize(self, budget=MEMORY_BUDGET_ENTRIES):
        return self.matrix.copy()


def gaussian_operator(m, n, seed=0, budget=MEMORY_BUDGET_ENTRIES):
    """Factory matching the operator construction interface of the ray transforms."""
    return GaussianOperator(m, n, seed=seed, budget=budget)
