"""Log-linearization of absorbed-fraction measurements.

Inverting the exponential turns nonlinear measurements into line integrals,
but the inverse blows up as measurements approach 1; the clamp below absorbs
the singularity and the clamp count is reported so callers can see how much
information was destroyed.
"""

import numpy as np

__all__ = ["log_preprocess", "DEFAULT_LOG_EPS"]

DEFAULT_LOG_EPS = 1e-12


def log_preprocess(y, eps=DEFAULT_LOG_EPS):
    """Linearize measurements via ``-log(max(1 - y, eps))``.

    Parameters
    ----------
    y : measurement vector (or MeasurementSet)
    eps : clamp floor for ``1 - y``, in (0, 1)

    Returns
    -------
    (yhat, n_clamped) : linearized values and how many entries hit the clamp
    """
    if not (0.0 < eps < 1.0):
        raise ValueError("eps must lie in (0, 1)")
    values = np.asarray(getattr(y, "y", y), dtype=np.float64)
    residual = 1.0 - values
    n_clamped = int(np.sum(residual < eps))
    return -np.log(np.maximum(residual, eps)), n_clamped
