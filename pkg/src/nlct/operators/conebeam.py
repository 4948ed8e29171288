"""3D cone-beam ray transform on a voxel grid.

Each row integrates the trilinearly interpolated volume along the ray from
a source point on a circular orbit to one detector pixel, by sampling at a
fixed step and weighting samples by the step length.  The adjoint scatters
the same weights, so the pair is an exact transpose up to rounding.
"""

from dataclasses import dataclass

import numpy as np
from numba import njit, prange

from ..exceptions import GeometryError
from .base import LinearOperator

__all__ = ["ConeBeamGeometry", "ConeBeam3DOperator", "conebeam3d_operator"]

_ADJOINT_CHUNKS = 8


@dataclass(frozen=True)
class ConeBeamGeometry:
    """Circular-orbit cone-beam acquisition.

    The source travels on a circle of ``orbit_radius`` (world units) in the
    z = 0 plane; a virtual flat detector of ``det_rows`` x ``det_cols``
    pixels with pitch ``det_spacing`` passes through the origin,
    perpendicular to the source direction.  ``step_voxels`` is the sampling
    step along each ray in units of the smallest voxel side.
    """

    orbit_radius: float
    n_views: int
    det_rows: int
    det_cols: int
    det_spacing: float = 1.0
    step_voxels: float = 0.5
    angles: np.ndarray = None

    def __post_init__(self):
        if self.orbit_radius <= 0:
            raise ValueError("orbit_radius must be > 0")
        if self.det_rows < 1 or self.det_cols < 1:
            raise ValueError("detector dims must be >= 1")
        if self.det_spacing <= 0 or self.step_voxels <= 0:
            raise ValueError("spacings must be > 0")
        angles = self.angles
        if angles is None:
            angles = np.arange(self.n_views) * (2.0 * np.pi / self.n_views)
        angles = np.ascontiguousarray(angles, dtype=np.float64).ravel()
        if angles.size != self.n_views or not np.all(np.isfinite(angles)):
            raise ValueError("angles must be finite and match n_views")
        object.__setattr__(self, "angles", angles)

    @property
    def n_rays(self):
        return self.n_views * self.det_rows * self.det_cols


@njit(cache=True, inline="always")
def _ray_box(px, py, pz, dx, dy, dz, hx, hy, hz):
    tiny = 1e-12
    tmin = -1e300
    tmax = 1e300
    for axis in range(3):
        if axis == 0:
            p, d, h = px, dx, hx
        elif axis == 1:
            p, d, h = py, dy, hy
        else:
            p, d, h = pz, dz, hz
        if abs(d) > tiny:
            ta = (-h - p) / d
            tb = (h - p) / d
            lo = min(ta, tb)
            hi = max(ta, tb)
            if lo > tmin:
                tmin = lo
            if hi < tmax:
                tmax = hi
        elif p <= -h or p >= h:
            return 1.0, 0.0
    return tmin, tmax


@njit(cache=True, inline="always")
def _ray_geometry(view, row, col, angles, orbit_radius, det_rows, det_cols, det_spacing):
    a = angles[view]
    ca = np.cos(a)
    sa = np.sin(a)
    sx = orbit_radius * ca
    sy = orbit_radius * sa
    sz = 0.0
    u = (col - (det_cols - 1) * 0.5) * det_spacing
    v = (row - (det_rows - 1) * 0.5) * det_spacing
    # detector plane through origin: u axis (-sin, cos, 0), v axis (0, 0, 1)
    px = -u * sa
    py = u * ca
    pz = v
    dx = px - sx
    dy = py - sy
    dz = pz - sz
    norm = np.sqrt(dx * dx + dy * dy + dz * dz)
    return sx, sy, sz, dx / norm, dy / norm, dz / norm


@njit(cache=True)
def _integrate_ray(vol, nx, ny, nz, spx, spy, spz, sx, sy, sz, dx, dy, dz,
                   step, acc_mode, ray_val, out_vol):
    hx = 0.5 * nx * spx
    hy = 0.5 * ny * spy
    hz = 0.5 * nz * spz
    t0, t1 = _ray_box(sx, sy, sz, dx, dy, dz, hx, hy, hz)
    if t1 <= t0:
        return 0.0
    n_samp = int((t1 - t0) / step)
    acc = 0.0
    for k in range(n_samp):
        t = t0 + (k + 0.5) * step
        # world -> voxel-center coordinates
        qx = (sx + t * dx + hx) / spx - 0.5
        qy = (sy + t * dy + hy) / spy - 0.5
        qz = (sz + t * dz + hz) / spz - 0.5
        ix = int(np.floor(qx))
        iy = int(np.floor(qy))
        iz = int(np.floor(qz))
        fx = qx - ix
        fy = qy - iy
        fz = qz - iz
        for c in range(8):
            ox = c & 1
            oy = (c >> 1) & 1
            oz = (c >> 2) & 1
            jx = ix + ox
            jy = iy + oy
            jz = iz + oz
            if 0 <= jx < nx and 0 <= jy < ny and 0 <= jz < nz:
                w = ((fx if ox == 1 else 1.0 - fx)
                     * (fy if oy == 1 else 1.0 - fy)
                     * (fz if oz == 1 else 1.0 - fz)) * step
                idx = (jx * ny + jy) * nz + jz
                if acc_mode == 0:
                    acc += w * vol[idx]
                else:
                    out_vol[idx] += w * ray_val
    return acc


@njit(cache=True, parallel=True)
def _cone_apply(vol, nx, ny, nz, spx, spy, spz, angles, orbit_radius,
                det_rows, det_cols, det_spacing, step, out):
    n_per_view = det_rows * det_cols
    n_rays = angles.size * n_per_view
    dummy = np.empty(0)
    for ray in prange(n_rays):
        view = ray // n_per_view
        rem = ray - view * n_per_view
        row = rem // det_cols
        col = rem - row * det_cols
        sx, sy, sz, dx, dy, dz = _ray_geometry(view, row, col, angles, orbit_radius,
                                               det_rows, det_cols, det_spacing)
        out[ray] = _integrate_ray(vol, nx, ny, nz, spx, spy, spz,
                                  sx, sy, sz, dx, dy, dz, step, 0, 0.0, dummy)


@njit(cache=True, parallel=True)
def _cone_adjoint(r, nx, ny, nz, spx, spy, spz, angles, orbit_radius,
                  det_rows, det_cols, det_spacing, step, bufs):
    n_per_view = det_rows * det_cols
    n_rays = angles.size * n_per_view
    n_chunks = bufs.shape[0]
    chunk = (n_rays + n_chunks - 1) // n_chunks
    dummy = np.empty(0)
    for ci in prange(n_chunks):
        lo = ci * chunk
        hi = min(lo + chunk, n_rays)
        for ray in range(lo, hi):
            view = ray // n_per_view
            rem = ray - view * n_per_view
            row = rem // det_cols
            col = rem - row * det_cols
            sx, sy, sz, dx, dy, dz = _ray_geometry(view, row, col, angles, orbit_radius,
                                                   det_rows, det_cols, det_spacing)
            _integrate_ray(dummy, nx, ny, nz, spx, spy, spz,
                           sx, sy, sz, dx, dy, dz, step, 1, r[ray], bufs[ci])


class ConeBeam3DOperator(LinearOperator):
    """Cone-beam projector over a 3D voxel grid centered at the origin."""

    kind = "conebeam3d"

    def __init__(self, geometry, grid_dims, voxel_spacing=1.0, deterministic_reduction=True):
        if not isinstance(geometry, ConeBeamGeometry):
            raise TypeError("geometry must be a ConeBeamGeometry")
        dims = tuple(int(d) for d in np.atleast_1d(grid_dims))
        if len(dims) != 3 or any(d < 1 for d in dims):
            raise ValueError("conebeam3d requires 3D grid dims")
        spacing = np.broadcast_to(np.asarray(voxel_spacing, dtype=np.float64), (3,))
        if np.any(spacing <= 0):
            raise ValueError("voxel_spacing must be > 0")
        half = 0.5 * np.array(dims) * spacing
        # source must stay outside the volume box for every view
        if geometry.orbit_radius <= float(np.hypot(half[0], half[1])):
            raise GeometryError(
                f"orbit radius {geometry.orbit_radius} puts the source inside or "
                f"tangent to the volume (xy circumradius {float(np.hypot(half[0], half[1])):.3f})"
            )
        self.geometry = geometry
        self.dims = dims
        self.voxel_spacing = tuple(float(s) for s in spacing)
        self.deterministic_reduction = bool(deterministic_reduction)
        self.step_world = geometry.step_voxels * float(spacing.min())
        self.m = geometry.n_rays
        self.n = dims[0] * dims[1] * dims[2]

    @property
    def op_id(self):
        g = self.geometry
        return (f"conebeam3d(dims={self.dims},views={g.n_views},det={g.det_rows}x{g.det_cols},"
                f"pitch={g.det_spacing},radius={g.orbit_radius},step={g.step_voxels})")

    def _apply(self, x):
        g = self.geometry
        out = np.empty(self.m)
        _cone_apply(x, self.dims[0], self.dims[1], self.dims[2],
                    self.voxel_spacing[0], self.voxel_spacing[1], self.voxel_spacing[2],
                    g.angles, g.orbit_radius, g.det_rows, g.det_cols, g.det_spacing,
                    self.step_world, out)
        return out

    def _apply_transpose(self, r):
        g = self.geometry
        if self.deterministic_reduction:
            n_chunks = _ADJOINT_CHUNKS
        else:
            import numba

            n_chunks = max(1, numba.get_num_threads())
        bufs = np.zeros((n_chunks, self.n))
        _cone_adjoint(r, self.dims[0], self.dims[1], self.dims[2],
                      self.voxel_spacing[0], self.voxel_spacing[1], self.voxel_spacing[2],
                      g.angles, g.orbit_radius, g.det_rows, g.det_cols, g.det_spacing,
                      self.step_world, bufs)
        return bufs.sum(axis=0)


def conebeam3d_operator(geometry, grid_dims, voxel_spacing=1.0, deterministic_reduction=True):
    return ConeBeam3DOperator(geometry, grid_dims, voxel_spacing=voxel_spacing,
                              deterministic_reduction=deterministic_reduction)
