"""Measurement operators: dense Gaussian and matrix-free ray transforms."""

import numpy as np

from .base import (LinearOperator, MatrixOperator, apply, apply_transpose,
                   MEMORY_BUDGET_ENTRIES)
from .gaussian import GaussianOperator, gaussian_operator, gaussian_row
from .radon2d import ParallelRayGeometry, Radon2DOperator, radon2d_operator
from .conebeam import ConeBeamGeometry, ConeBeam3DOperator, conebeam3d_operator

__all__ = [
    "LinearOperator", "MatrixOperator", "apply", "apply_transpose", "MEMORY_BUDGET_ENTRIES",
    "GaussianOperator", "gaussian_operator", "gaussian_row",
    "ParallelRayGeometry", "Radon2DOperator", "radon2d_operator",
    "ConeBeamGeometry", "ConeBeam3DOperator", "conebeam3d_operator",
    "from_config",
]


def from_config(block, grid_dims=None, spacing=1.0, n=None, seed=0):
    """Build an operator from a JSON-style geometry block.

    Recognized blocks::

        {"kind": "gaussian", "m": <rows>, ["seed": <int>]}
        {"kind": "radon2d", "angles": <count or list of radians>,
         "det_bins": <int>, ["det_spacing": <float>]}
        {"kind": "conebeam3d", "orbit_radius": <float>, "n_views": <int>,
         "det_rows": <int>, "det_cols": <int>,
         ["det_spacing": <float>], ["step_voxels": <float>]}

    ``grid_dims``/``spacing`` describe the signal grid for ray transforms;
    ``n`` gives the signal length for the Gaussian ensemble (defaults to the
    grid size).
    """
    kind = block.get("kind")
    if kind == "gaussian":
        if n is None:
            if grid_dims is None:
                raise ValueError("gaussian block needs n or grid_dims")
            n = int(np.prod(grid_dims))
        return GaussianOperator(int(block["m"]), n, seed=int(block.get("seed", seed)))
    if kind == "radon2d":
        angles = block["angles"]
        if np.isscalar(angles):
            angles = np.arange(int(angles)) * (np.pi / int(angles))
        geom = ParallelRayGeometry(angles=angles, n_bins=int(block["det_bins"]),
                                   bin_spacing=float(block.get("det_spacing", 1.0)))
        return Radon2DOperator(geom, grid_dims, pixel_spacing=float(np.min(spacing)))
    if kind == "conebeam3d":
        geom = ConeBeamGeometry(
            orbit_radius=float(block["orbit_radius"]),
            n_views=int(block["n_views"]),
            det_rows=int(block["det_rows"]),
            det_cols=int(block["det_cols"]),
            det_spacing=float(block.get("det_spacing", 1.0)),
            step_voxels=float(block.get("step_voxels", 0.5)),
        )
        return ConeBeam3DOperator(geom, grid_dims, voxel_spacing=spacing)
    raise ValueError(f"unknown operator kind {kind!r}")
