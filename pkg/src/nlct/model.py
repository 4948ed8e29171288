"""Beer-Lambert measurement model: nonlinearity, loss, and gradient.

The forward model maps a nonnegative line integral ``t`` to the absorbed
fraction ``1 - exp(-max(t, 0))``.  Reconstruction minimizes a least-squares
loss between observed fractions and the model's prediction.
"""

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

__all__ = [
    "GridGeometry",
    "Signal",
    "NoiseSpec",
    "MeasurementSet",
    "beer_lambert",
    "beer_lambert_subgrad",
    "measure",
    "loss",
    "grad_loss",
    "MAX_MEASUREMENT",
]

# Largest storable noiseless-model value: measurements live in [0, 1).
MAX_MEASUREMENT = 1.0 - 2.0 ** -52


@dataclass(frozen=True)
class GridGeometry:
    """Regular voxel grid descriptor for 1D/2D/3D signals."""

    dims: Tuple[int, ...]
    spacing: Tuple[float, ...] = None

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        if any(d < 1 for d in dims):
            raise ValueError(f"grid dims must be positive, got {dims}")
        spacing = self.spacing
        if spacing is None:
            spacing = (1.0,) * len(dims)
        spacing = tuple(float(s) for s in spacing)
        if len(spacing) != len(dims):
            raise ValueError("spacing must have one entry per grid axis")
        if any(s <= 0 for s in spacing):
            raise ValueError("spacing entries must be positive")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "spacing", spacing)

    @property
    def size(self):
        return int(np.prod(self.dims))


@dataclass
class Signal:
    """A flat density vector with optional grid geometry.

    ``values`` is stored as a contiguous float64 vector.  When ``geometry``
    is present its total size must match ``len(values)``; when ``nonneg``
    is set every entry must be >= 0.
    """

    values: np.ndarray
    geometry: Optional[GridGeometry] = None
    nonneg: bool = False

    def __post_init__(self):
        self.values = np.ascontiguousarray(self.values, dtype=np.float64).ravel()
        if self.geometry is not None and self.geometry.size != self.values.size:
            raise ValueError(
                f"geometry size {self.geometry.size} != vector length {self.values.size}"
            )
        if self.nonneg and self.values.size and self.values.min() < 0:
            raise ValueError("nonneg signal has negative entries")

    @property
    def n(self):
        return self.values.size

    def reshaped(self):
        """Values as an nd-array in grid shape (requires geometry)."""
        if self.geometry is None:
            raise ValueError("signal has no grid geometry")
        return self.values.reshape(self.geometry.dims)


@dataclass(frozen=True)
class NoiseSpec:
    """Optional measurement perturbations applied after the nonlinearity.

    sigma : additive Gaussian noise level (0 disables).
    quant_bits : quantize to 2**bits uniform levels on [0, 1] (None disables).
    """

    sigma: float = 0.0
    quant_bits: Optional[int] = None

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError("noise sigma must be >= 0")
        if self.quant_bits is not None and self.quant_bits < 1:
            raise ValueError("quant_bits must be >= 1")


@dataclass
class MeasurementSet:
    """Raw nonlinear measurements plus provenance.

    y : absorbed fractions, one per operator row.
    op_id : identifier of the generating operator (see operator.op_id).
    seed : RNG seed used for the noise draw.
    noise_spec : the perturbation applied, if any.
    """

    y: np.ndarray
    op_id: str = ""
    seed: int = 0
    noise_spec: Optional[NoiseSpec] = None

    def __post_init__(self):
        self.y = np.asarray(self.y)
        if self.y.ndim != 1:
            raise ValueError("measurements must be a 1D vector")

    @property
    def m(self):
        return self.y.size


def _as_values(x):
    if isinstance(x, Signal):
        return x.values
    return np.ascontiguousarray(x, dtype=np.float64).ravel()


def _check_finite(t):
    if not np.all(np.isfinite(t)):
        raise ValueError("input must be finite")


def _response(t):
    # 1 - exp(-relu(t)), no validation; shared fast path.  Clamped below 1 so
    # the [0, 1) range survives float rounding at huge inputs.
    return np.minimum(-np.expm1(-np.maximum(t, 0.0)), MAX_MEASUREMENT)


def _response_deriv(t):
    d = np.where(t > 0.0, np.exp(-np.maximum(t, 0.0)), 0.0)
    return np.where(t == 0.0, 0.5, d)


def beer_lambert(t):
    """Absorbed fraction ``1 - exp(-max(t, 0))`` of a line integral ``t``.

    Monotone nondecreasing, 1-Lipschitz, with range [0, 1).  Accepts scalars
    or arrays; raises ValueError on non-finite input.
    """
    t = np.asarray(t, dtype=np.float64)
    _check_finite(t)
    out = _response(t)
    return float(out) if out.ndim == 0 else out

def beer_lambert_subgrad(t):
    """Subdifferential of the absorbed-fraction response.

    0 for t < 0, 1/2 at t = 0 (the tie value used throughout optimization),
    exp(-t) for t > 0.
    """
    t = np.asarray(t, dtype=np.float64)
    _check_finite(t)
    out = _response_deriv(t)
    return float(out) if out.ndim == 0 else out


def measure(op, x, noise_spec=None, seed=0, store_dtype=np.float64):
    """Simulate measurements ``y_i = beer_lambert(<a_i, x>)`` for operator rows a_i.

    Optional noise (Gaussian and/or quantization) is applied after the
    nonlinearity and the result is clamped to [0, 1 - 2**-52].  The draw is
    deterministic given ``seed``.  ``store_dtype=np.float32`` emulates
    single-precision measurement storage; values are rounded to float32 and
    returned as float64.

    Parameters
    ----------
    op : measurement operator with ``apply`` / shape attributes
    x : Signal or vector of length op.n
    noise_spec : NoiseSpec, optional
    seed : int
    store_dtype : numpy dtype for measurement storage

    Returns
    -------
    MeasurementSet
    """
    v = _as_values(x)
    if v.size != op.n:
        raise ValueError(f"operator expects length {op.n}, got {v.size}")
    y = _response(op.apply(v))
    if noise_spec is not None:
        rng = np.random.default_rng(seed)
        if noise_spec.sigma > 0:
            y = y + noise_spec.sigma * rng.standard_normal(y.size)
        if noise_spec.quant_bits is not None:
            levels = 2 ** noise_spec.quant_bits - 1
            y = np.round(y * levels) / levels
        y = np.clip(y, 0.0, MAX_MEASUREMENT)
    dtype = np.dtype(store_dtype)
    if dtype != np.float64:
        y = y.astype(dtype).astype(np.float64)
    return MeasurementSet(y=y, op_id=getattr(op, "op_id", ""), seed=seed,
                          noise_spec=noise_spec)


def _measurement_values(y):
    if isinstance(y, MeasurementSet):
        return y.y
    return np.ascontiguousarray(y, dtype=np.float64).ravel()


def loss(op, y, z):
    """Least-squares data fit ``sum((y_i - beer_lambert(<a_i, z>))**2) / (2m)``."""
    yv = _measurement_values(y)
    zv = _as_values(z)
    if yv.size != op.m or zv.size != op.n:
        raise ValueError("dimension mismatch between operator, measurements, and iterate")
    r = _response(op.apply(zv)) - yv
    return float(r @ r) / (2.0 * yv.size)


def grad_loss(op, y, z):
    """Gradient of :func:`loss` at ``z``.

    Returns ``(1/m) * sum_i a_i f'(<a_i,z>) (f(<a_i,z>) - y_i)`` where f is
    the absorbed-fraction response and f' its subdifferential (1/2 at ties).
    """
    yv = _measurement_values(y)
    zv = _as_values(z)
    if yv.size != op.m or zv.size != op.n:
        raise ValueError("dimension mismatch between operator, measurements, and iterate")
    p = op.apply(zv)
    w = _response_deriv(p) * (_response(p) - yv)
    return op.apply_transpose(w) / yv.size
