"""Synthetic head phantoms (Shepp-Logan family) and reconstruction metrics.

The ellipse/ellipsoid parameter tables below are the canonical ten-element
sets in the high-contrast ("modified") density convention, cross-checked
against independently published tables (the classic 2D set used by MATLAB's
``phantom`` and scikit-image, and its standard 3D extension with rotation
about z only).  Columns: additive density, semi-axes, center, rotation about
z in degrees.  Coordinates are normalized to [-1, 1] per axis.
"""

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .model import GridGeometry, Signal

__all__ = [
    "EllipsoidSpec", "PhantomConfig", "shepp_logan", "psnr",
    "SHEPP_LOGAN_2D", "SHEPP_LOGAN_3D", "TEST_ELLIPSOID_INDEX",
    "DENSITY_PRESETS",
]

#                 density   a       b      x0      y0     rot_deg
SHEPP_LOGAN_2D = (
    ( 1.0,  0.6900, 0.9200,  0.00,  0.0000,   0.0),
    (-0.8,  0.6624, 0.8740,  0.00, -0.0184,   0.0),
    (-0.2,  0.1100, 0.3100,  0.22,  0.0000, -18.0),
    (-0.2,  0.1600, 0.4100, -0.22,  0.0000,  18.0),
    ( 0.1,  0.2100, 0.2500,  0.00,  0.3500,   0.0),
    ( 0.1,  0.0460, 0.0460,  0.00,  0.1000,   0.0),
    ( 0.1,  0.0460, 0.0460,  0.00, -0.1000,   0.0),
    ( 0.1,  0.0460, 0.0230, -0.08, -0.6050,   0.0),
    ( 0.1,  0.0230, 0.0230,  0.00, -0.6060,   0.0),
    ( 0.1,  0.0230, 0.0460,  0.06, -0.6050,   0.0),
)

#                 density   a       b       c      x0      y0      z0   rot_deg
SHEPP_LOGAN_3D = (
    ( 1.0,  0.6900, 0.9200, 0.810,  0.00,  0.0000,  0.00,   0.0),
    (-0.8,  0.6624, 0.8740, 0.780,  0.00, -0.0184,  0.00,   0.0),
    (-0.2,  0.1100, 0.3100, 0.220,  0.22,  0.0000,  0.00, -18.0),
    (-0.2,  0.1600, 0.4100, 0.280, -0.22,  0.0000,  0.00,  18.0),
    ( 0.1,  0.2100, 0.2500, 0.410,  0.00,  0.3500, -0.15,   0.0),
    ( 0.1,  0.0460, 0.0460, 0.050,  0.00,  0.1000,  0.25,   0.0),
    ( 0.1,  0.0460, 0.0460, 0.050,  0.00, -0.1000,  0.25,   0.0),
    ( 0.1,  0.0460, 0.0230, 0.050, -0.08, -0.6050,  0.00,   0.0),
    ( 0.1,  0.0230, 0.0230, 0.020,  0.00, -0.6060,  0.00,   0.0),
    ( 0.1,  0.0230, 0.0460, 0.020,  0.06, -0.6050,  0.00,   0.0),
)

# The large off-center blob (semi-axes 0.21 x 0.25 [x 0.41]) doubles as the
# variable-density test feature for the soft-tissue -> metal sweep.
TEST_ELLIPSOID_INDEX = 4

# Final additive densities for the test feature (already on the scaled-down
# density axis used by the experiments).
DENSITY_PRESETS = {"soft_tissue": 0.05, "bone": 0.25, "metal": 1.5}


@dataclass(frozen=True)
class EllipsoidSpec:
    """One additive ellipsoid in normalized [-1, 1]^3 coordinates."""

    center: Tuple[float, float, float]
    semi_axes: Tuple[float, float, float]
    rotation: Tuple[float, float, float] = (0.0, 0.0, 0.0)  # Euler z, y, x (radians)
    density: float = 1.0

    def __post_init__(self):
        if any(a <= 0 for a in self.semi_axes):
            raise ValueError("semi-axes must be > 0")


@dataclass(frozen=True)
class PhantomConfig:
    """Options for phantom generation.

    density_scale multiplies every table density; the designated test
    ellipsoid is enlarged by ``test_ellipsoid_enlargement`` and, when
    ``test_ellipsoid_density`` is given, its (already scaled) additive
    density is replaced by that value.
    """

    density_scale: float = 0.25
    test_ellipsoid_density: Optional[float] = None
    test_ellipsoid_enlargement: float = 1.3

    def __post_init__(self):
        if self.density_scale <= 0:
            raise ValueError("density_scale must be > 0")
        if self.test_ellipsoid_enlargement <= 0:
            raise ValueError("test_ellipsoid_enlargement must be > 0")


def _rot_z(deg):
    a = np.deg2rad(deg)
    c, s = np.cos(a), np.sin(a)
    return np.array([[c, -s], [s, c]])


def ellipsoids_for(config, ndim):
    """Expand the table rows into EllipsoidSpec with config applied."""
    table = SHEPP_LOGAN_2D if ndim == 2 else SHEPP_LOGAN_3D
    out = []
    for idx, row in enumerate(table):
        if ndim == 2:
            dens, a, b, x0, y0, rot = row
            axes = (a, b, 1.0)
            center = (x0, y0, 0.0)
        else:
            dens, a, b, c, x0, y0, z0, rot = row
            axes = (a, b, c)
            center = (x0, y0, z0)
        dens = dens * config.density_scale
        if idx == TEST_ELLIPSOID_INDEX:
            axes = tuple(ax * config.test_ellipsoid_enlargement for ax in axes)
            if config.test_ellipsoid_density is not None:
                dens = config.test_ellipsoid_density
        out.append(EllipsoidSpec(center=center, semi_axes=axes,
                                 rotation=(np.deg2rad(rot), 0.0, 0.0), density=dens))
    return out


def _centers(n):
    # voxel-center coordinates on [-1, 1]
    return (2.0 * np.arange(n) + 1.0) / n - 1.0


def shepp_logan(dims, config=None):
    """Rasterize the phantom onto a 2D or 3D grid.

    Voxel values are the additive densities of all ellipsoids containing the
    voxel center (no anti-aliasing), scaled per the config, clamped to >= 0.
    Deterministic: no randomness enters generation.

    Parameters
    ----------
    dims : (n, n) or (n, n, n); every axis must be >= 16
    config : PhantomConfig, optional

    Returns
    -------
    Signal with grid geometry (unit voxel spacing) and nonneg flag set.
    """
    config = config or PhantomConfig()
    dims = tuple(int(d) for d in np.atleast_1d(dims))
    if len(dims) not in (2, 3):
        raise ValueError("phantom dims must be 2D or 3D")
    if any(d < 16 for d in dims):
        raise ValueError("phantom needs >= 16 voxels per axis")
    ndim = len(dims)
    axes_coords = [_centers(d) for d in dims]
    grids = np.meshgrid(*axes_coords, indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=1)
    if ndim == 2:
        pts = np.column_stack([pts, np.zeros(pts.shape[0])])
    vol = np.zeros(pts.shape[0])
    for ell in ellipsoids_for(config, ndim):
        q = pts - np.asarray(ell.center)
        rz = ell.rotation[0]
        if rz != 0.0:
            c, s = np.cos(rz), np.sin(rz)
            qx = c * q[:, 0] + s * q[:, 1]
            qy = -s * q[:, 0] + c * q[:, 1]
        else:
            qx, qy = q[:, 0], q[:, 1]
        qz = q[:, 2]
        ax, ay, az = ell.semi_axes
        inside = (qx / ax) ** 2 + (qy / ay) ** 2 + (qz / az) ** 2 <= 1.0
        vol[inside] += ell.density
    vol = np.maximum(vol, 0.0)
    return Signal(values=vol, geometry=GridGeometry(dims), nonneg=True)


def psnr(recon, truth):
    """Peak signal-to-noise ratio ``-10 * log10(mean squared error)`` in dB.

    Returns +inf when the volumes match exactly.
    """
    a = recon.values if isinstance(recon, Signal) else np.asarray(recon, dtype=np.float64)
    b = truth.values if isinstance(truth, Signal) else np.asarray(truth, dtype=np.float64)
    a, b = a.ravel(), b.ravel()
    if a.size == 0 or a.size != b.size:
        raise ValueError("volumes must be non-empty and of equal size")
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return np.inf
    return -10.0 * np.log10(mse)
