"""Scikit-learn style estimators for nonlinear and linearized reconstruction.

The measurement matrix plays the role of the design matrix: ``fit(X, y)``
recovers the density vector generating absorbed fractions ``y`` through the
exponential forward model, exposing it as ``coef_``.  Both estimators follow
the sklearn parameter contract (constructor stores parameters verbatim,
``get_params``/``set_params``/``clone`` work), so they drop into pipelines
and model-selection utilities.
"""

from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from .model import beer_lambert
from .optimize import (ConstraintSet, StepSchedule, auto_schedule,
                       estimate_signal_norm, gradient_descent,
                       projected_gradient_descent, regularized_descent)
from .preprocess import DEFAULT_LOG_EPS, log_preprocess
from .validation import as_operator, check_consistent, check_measurements

__all__ = ["NonlinearCTRegressor", "LinearizedCTRegressor"]


class _BaseCTRegressor(BaseEstimator, RegressorMixin):
    def __init__(self, step_mode="auto", step_size=None, norm_x=None,
                 constraint=None, tv_weight=0.0, grid_shape=None, nonneg=False,
                 max_iter=1000, tol=1e-12):
        self.step_mode = step_mode
        self.step_size = step_size
        self.norm_x = norm_x
        self.constraint = constraint
        self.tv_weight = tv_weight
        self.grid_shape = grid_shape
        self.nonneg = nonneg
        self.max_iter = max_iter
        self.tol = tol

    def _schedule(self, op, y):
        # step_size=None picks the mode's default: the safety scale 1.5 for
        # "auto", step 1.0 for "constant", the calibrated base for "theorem"
        if self.step_mode == "auto":
            return auto_schedule(op, scale=1.5 if self.step_size is None else self.step_size)
        if self.step_mode == "constant":
            return StepSchedule(mode="constant",
                                mu=1.0 if self.step_size is None else self.step_size)
        if self.step_mode == "theorem":
            norm_x = self.norm_x
            if norm_x is None:
                norm_x = estimate_signal_norm(y)
            if self.step_size is None:
                return StepSchedule(mode="theorem", norm_x=norm_x)
            return StepSchedule(mode="theorem", norm_x=norm_x, mu=self.step_size)
        raise ValueError(f"unknown step_mode {self.step_mode!r}")

    def predict(self, X):
        """Model measurements for the fitted density: ``beer_lambert(X @ coef_)``."""
        check_is_fitted(self, "coef_")
        op = as_operator(X)
        return beer_lambert(op.apply(self.coef_))

    def _finalize(self, trajectory):
        self.coef_ = trajectory.z
        self.trajectory_ = trajectory
        self.n_iter_ = trajectory.n_iter
        return self


class NonlinearCTRegressor(_BaseCTRegressor):
    """Recover a density vector directly through the exponential forward model.

    Parameters
    ----------
    step_mode : "auto" (constant step from a power-iteration scale),
        "constant", or "theorem" (first step from the signal-norm formula,
        damped later steps; ``norm_x`` is estimated from the measurement
        mean when not given).
    step_size : base step (mode "constant"/"theorem") or safety scale
        (mode "auto").
    constraint : optional ConstraintSet applied by projection each step.
    tv_weight, grid_shape : total-variation penalty and the grid it acts on.
    nonneg : clamp iterates to be nonnegative (implied by tv_weight > 0).
    max_iter, tol : iteration cap and gradient-norm stopping tolerance.

    Attributes
    ----------
    coef_ : recovered density vector.
    trajectory_ : full per-iteration record.
    n_iter_ : iterations actually run.
    """

    def fit(self, X, y):
        op = as_operator(X)
        yv = check_measurements(y)
        check_consistent(op, yv)
        sched = self._schedule(op, yv)
        if self.constraint is not None:
            if not isinstance(self.constraint, ConstraintSet):
                raise TypeError("constraint must be a ConstraintSet")
            traj = projected_gradient_descent(op, yv, sched, self.constraint,
                                              max_iter=self.max_iter, tol=self.tol)
        elif self.tv_weight > 0.0 or self.nonneg:
            traj = regularized_descent(op, yv, sched, self.tv_weight,
                                       max_iter=self.max_iter, tol=self.tol,
                                       geometry=self.grid_shape, nonneg=True)
        else:
            traj = gradient_descent(op, yv, sched, max_iter=self.max_iter, tol=self.tol)
        return self._finalize(traj)


class LinearizedCTRegressor(_BaseCTRegressor):
    """Baseline: log-linearize measurements, then solve the linear least squares.

    Shares every optimization choice with :class:`NonlinearCTRegressor` so
    that differences in reconstruction quality isolate the forward-model
    choice.  ``eps`` floors ``1 - y`` before the logarithm; the number of
    clamped measurements is exposed as ``n_clamped_``.
    """

    def __init__(self, step_mode="auto", step_size=1.0, norm_x=None,
                 constraint=None, tv_weight=0.0, grid_shape=None, nonneg=False,
                 max_iter=1000, tol=1e-12, eps=DEFAULT_LOG_EPS):
        super().__init__(step_mode=step_mode, step_size=step_size, norm_x=norm_x,
                         constraint=constraint, tv_weight=tv_weight,
                         grid_shape=grid_shape, nonneg=nonneg,
                         max_iter=max_iter, tol=tol)
        self.eps = eps

    def fit(self, X, y):
        op = as_operator(X)
        yv = check_measurements(y)
        check_consistent(op, yv)
        yhat, self.n_clamped_ = log_preprocess(yv, eps=self.eps)
        if self.step_mode == "theorem" and self.norm_x is None:
            sched = StepSchedule(mode="theorem", norm_x=estimate_signal_norm(yv),
                                 mu=self.step_size)
        else:
            sched = self._schedule(op, yhat)
        if self.constraint is not None:
            raise ValueError("constraint projection is only wired to the nonlinear path")
        traj = regularized_descent(op, yhat, sched, self.tv_weight,
                                   max_iter=self.max_iter, tol=self.tol,
                                   geometry=self.grid_shape, nonneg=self.nonneg or self.tv_weight > 0.0,
                                   linearized=True)
        return self._finalize(traj)

    def predict(self, X):
        """Linearized model measurements ``X @ coef_`` (line integrals, not fractions)."""
        check_is_fitted(self, "coef_")
        op = as_operator(X)
        return op.apply(self.coef_)
