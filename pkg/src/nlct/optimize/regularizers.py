"""Anisotropic total variation on grid signals, with a smoothed subgradient."""

import numpy as np

from ..model import Signal

__all__ = ["total_variation", "tv_subgradient", "TV_SMOOTH_EPS"]

TV_SMOOTH_EPS = 1e-8


def _grid_values(z):
    if isinstance(z, Signal):
        if z.geometry is None:
            raise ValueError("signal has no grid geometry; total variation needs one")
        return z.reshaped()
    arr = np.asarray(z, dtype=np.float64)
    if arr.ndim < 1:
        raise ValueError("total variation needs an array with grid shape")
    return arr


def total_variation(z, eps=0.0):
    """Sum over axes of |forward difference|, smoothed as sqrt(d**2 + eps**2).

    ``z`` is a Signal with grid geometry or an nd-array in grid shape.
    ``eps=0`` gives the plain anisotropic TV value.
    """
    v = _grid_values(z)
    total = 0.0
    for ax in range(v.ndim):
        d = np.diff(v, axis=ax)
        if eps > 0:
            total += np.sum(np.sqrt(d * d + eps * eps))
        else:
            total += np.sum(np.abs(d))
    return float(total)


def tv_subgradient(z, eps=TV_SMOOTH_EPS):
    """Gradient of the smoothed anisotropic TV, flattened to a vector.

    Each axis contributes d / sqrt(d**2 + eps**2) at the forward position and
    its negation at the backward position; a constant image maps to ~0.
    """
    v = _grid_values(z)
    g = np.zeros_like(v)
    for ax in range(v.ndim):
        d = np.diff(v, axis=ax)
        w = d / np.sqrt(d * d + eps * eps)
        lead = [slice(None)] * v.ndim
        lag = [slice(None)] * v.ndim
        lead[ax] = slice(1, None)
        lag[ax] = slice(None, -1)
        g[tuple(lead)] += w
        g[tuple(lag)] -= w
    return g.ravel()
