"""Direct nonlinear CT reconstruction and theory-verification toolkit."""

__version__ = "0.1.0"

from .exceptions import CapacityError, DivergenceError, GeometryError
from .model import (
    GridGeometry,
    MeasurementSet,
    NoiseSpec,
    Signal,
    beer_lambert,
    beer_lambert_subgrad,
    grad_loss,
    loss,
    measure,
)

__all__ = [
    "__version__",
    "CapacityError", "DivergenceError", "GeometryError",
    "GridGeometry", "MeasurementSet", "NoiseSpec", "Signal",
    "beer_lambert", "beer_lambert_subgrad", "grad_loss", "loss", "measure",
]
