"""Euclidean projections onto the constraint sets used by projected descent."""

from dataclasses import dataclass
from typing import Optional

import numpy as np

__all__ = ["ConstraintSet", "project", "project_l1_ball", "project_nonneg",
           "project_nonneg_l1", "l1_ball", "nonneg", "nonneg_l1", "full_space"]

_KINDS = ("l1_ball", "nonneg", "nonneg_l1", "tv_ball_unsupported", "full_space")


@dataclass(frozen=True)
class ConstraintSet:
    """A projectable constraint set.

    kind : one of l1_ball, nonneg, nonneg_l1, tv_ball_unsupported, full_space.
    radius : ball radius where applicable; ``inf`` means the full space.
    """

    kind: str
    radius: Optional[float] = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown constraint kind {self.kind!r}")
        if self.kind in ("l1_ball", "nonneg_l1"):
            if self.radius is None or not self.radius > 0:
                raise ValueError("ball radius must be > 0")


def l1_ball(radius):
    if np.isinf(radius):
        return full_space()
    return ConstraintSet("l1_ball", float(radius))


def nonneg():
    return ConstraintSet("nonneg")


def nonneg_l1(radius):
    return ConstraintSet("nonneg_l1", float(radius))


def full_space():
    return ConstraintSet("full_space")


def project_l1_ball(v, radius):
    """Exact projection onto {w : ||w||_1 <= radius} by sort-based thresholding."""
    if not radius > 0:
        raise ValueError("ball radius must be > 0")
    a = np.abs(v)
    if a.sum() <= radius:
        return v
    u = np.sort(a)[::-1]
    css = np.cumsum(u)
    k = np.nonzero(u * np.arange(1, v.size + 1) > (css - radius))[0][-1]
    theta = (css[k] - radius) / (k + 1.0)
    return np.sign(v) * np.maximum(a - theta, 0.0)


def project_nonneg(v):
    return np.maximum(v, 0.0)


def project_nonneg_l1(v, radius, tol=1e-10, max_iter=1000):
    """Projection onto {w >= 0, ||w||_1 <= radius}.

    Alternating projections with Dykstra correction terms, iterated to
    ``tol`` so the limit is the Euclidean projection onto the intersection.
    """
    if not radius > 0:
        raise ValueError("ball radius must be > 0")
    x = np.asarray(v, dtype=np.float64)
    p = np.zeros_like(x)
    q = np.zeros_like(x)
    for _ in range(max_iter):
        y = project_nonneg(x + p)
        p = x + p - y
        x_new = project_l1_ball(y + q, radius)
        q = y + q - x_new
        if np.max(np.abs(x_new - x)) < tol:
            return x_new
        x = x_new
    return x


def project(cset, v):
    """Euclidean projection of vector ``v`` onto ``cset``. Idempotent and non-expansive."""
    v = np.ascontiguousarray(v, dtype=np.float64).ravel()
    if cset.kind == "full_space":
        return v
    if cset.kind == "l1_ball":
        return project_l1_ball(v, cset.radius)
    if cset.kind == "nonneg":
        return project_nonneg(v)
    if cset.kind == "nonneg_l1":
        return project_nonneg_l1(v, cset.radius)
    raise NotImplementedError(
        "projection onto a total-variation ball is not supported; use the "
        "penalty form of the regularizer instead"
    )
