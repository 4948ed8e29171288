"""Step-size schedules and the measurement-mean norm estimator.

The first-step size is chosen so that the expected first iterate from a zero
start equals the true signal; later steps use a base step damped by
``exp(-5 * norm_x)``.  Both involve the complementary error function, which
is evaluated in scaled form (erfcx) so that large norms neither overflow
nor underflow.
"""

import warnings
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.special import erfcx

__all__ = ["DEFAULT_BASE_STEP", "StepSchedule", "step_size_mu1",
           "mean_absorption", "estimate_signal_norm"]

# Pilot-calibrated base step for iterations t > 1 (the damped step is
# mu * exp(-5 * norm_x)); halving on loss increase keeps it safe.
DEFAULT_BASE_STEP = 16.0

_NORM_BRACKET = 50.0


def step_size_mu1(norm_x):
    """First-iteration step ``4 * exp(-norm_x**2 / 2) / erfc(norm_x / sqrt(2))``.

    Computed as ``4 / erfcx(norm_x / sqrt(2))`` for numerical range safety.
    """
    if norm_x < 0:
        raise ValueError("signal norm must be >= 0")
    return 4.0 / float(erfcx(norm_x / np.sqrt(2.0)))


def mean_absorption(norm_x):
    """Expected measurement mean ``E[1 - exp(-g_+ * norm_x)]`` for standard normal g.

    Equals ``1 - (1 + exp(norm_x**2/2) * erfc(norm_x/sqrt(2))) / 2``; strictly
    increasing in ``norm_x`` with range [0, 1/2).
    """
    if norm_x < 0:
        raise ValueError("signal norm must be >= 0")
    return 1.0 - 0.5 * (1.0 + float(erfcx(norm_x / np.sqrt(2.0))))


def estimate_signal_norm(y, tol=1e-10):
    """Estimate the signal norm from the mean of Gaussian-ensemble measurements.

    Inverts :func:`mean_absorption` by bisection on [0, 50] to ``tol``.
    Accepts a MeasurementSet or a plain vector of measurements.  A negative
    mean (possible under noise) is clamped to zero with a warning; a mean
    >= 1 is rejected.
    """
    values = np.asarray(getattr(y, "y", y), dtype=np.float64).ravel()
    ybar = float(values.mean())
    if ybar >= 1.0 or not np.isfinite(ybar):
        raise ValueError(f"mean measurement {ybar} outside [0, 1)")
    if ybar < 0.0:
        warnings.warn("negative mean measurement clamped to 0", stacklevel=2)
        ybar = 0.0
    if ybar == 0.0:
        return 0.0
    if ybar >= mean_absorption(_NORM_BRACKET):
        warnings.warn(
            f"mean measurement {ybar:.6f} saturates the invertible range; "
            f"returning the bracket endpoint {_NORM_BRACKET}", stacklevel=2)
        return _NORM_BRACKET
    lo, hi = 0.0, _NORM_BRACKET
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mean_absorption(mid) < ybar:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass
class StepSchedule:
    """Per-iteration step sizes ``mu_t``.

    mode "theorem": ``mu_1 = step_size_mu1(norm_x)`` and
    ``mu_t = mu * exp(-5 * norm_x)`` for t > 1 (``norm_x`` required; pass the
    estimator output when the true norm is unknown).
    mode "constant": ``mu_t = mu`` for every t (``mu1`` may override t = 1).
    mode "custom": ``step_fn(t)`` supplies every step.
    """

    mode: str = "theorem"
    norm_x: Optional[float] = None
    mu: float = DEFAULT_BASE_STEP
    mu1: Optional[float] = None
    step_fn: Optional[Callable[[int], float]] = None

    def __post_init__(self):
        if self.mode not in ("theorem", "constant", "custom"):
            raise ValueError(f"unknown schedule mode {self.mode!r}")
        if self.mode == "theorem":
            if self.norm_x is None or self.norm_x < 0:
                raise ValueError("theorem mode needs norm_x >= 0")
            if self.mu1 is None:
                self.mu1 = step_size_mu1(self.norm_x)
        if self.mode == "constant" and self.mu1 is None:
            self.mu1 = self.mu
        if self.mode == "custom" and self.step_fn is None:
            raise ValueError("custom mode needs step_fn")
        if self.mode != "custom":
            if not self.mu > 0 or not self.mu1 > 0:
                raise ValueError("step sizes must be > 0")

    def step(self, t):
        """Step size for iteration t >= 1."""
        if self.mode == "custom":
            s = float(self.step_fn(t))
            if not s > 0:
                raise ValueError("step sizes must be > 0")
            return s
        if t == 1:
            return self.mu1
        if self.mode == "theorem":
            return self.mu * float(np.exp(-5.0 * self.norm_x))
        return self.mu

def operator_scale(op, iters=16, seed=0):
    """Largest eigenvalue of ``A^T A / m`` by power iteration (seeded, fixed length)."""
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(op.n)
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(iters):
        w = op.apply_transpose(op.apply(v))
        lam = float(np.linalg.norm(w))
        if lam == 0.0:
            return 0.0
        v = w / lam
    return lam / op.m


def auto_schedule(op, scale=1.5, iters=16, seed=0):
    """Constant schedule with step ``scale / lambda_max(A^T A / m)``.

    A practical choice for volumetric reconstructions where the theory
    schedule's calibration (Gaussian ensembles, known signal norm) does not
    apply; backtracking halving absorbs the early high-curvature phase.
    """
    lam = operator_scale(op, iters=iters, seed=seed)
    if lam <= 0:
        raise ValueError("operator scale estimate is not positive")
    return StepSchedule(mode="constant", mu=scale / lam)
