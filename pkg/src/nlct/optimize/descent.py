"""Gradient descent, projected variants, and the regularized volumetric solver.

All solvers start from the zero vector, take ``mu_t``-sized gradient steps,
and return a :class:`Trajectory` recording loss, gradient norm, and (when the
true signal is supplied) error norm at every iteration including t = 0.
Whenever a step (t > 1) would increase the objective it is retried with a
halved step, at most ``MAX_HALVINGS`` times; the next iteration starts from
the scheduled step again, so a transient high-curvature phase cannot
permanently shrink the step.
"""

import time
from dataclasses import dataclass

import numpy as np

from ..exceptions import DivergenceError
from ..model import _as_values, _measurement_values, _response, _response_deriv
from .projections import ConstraintSet, project
from .regularizers import total_variation, tv_subgradient, TV_SMOOTH_EPS

__all__ = ["Trajectory", "gradient_descent", "projected_gradient_descent",
           "regularized_descent", "MAX_HALVINGS", "DEFAULT_GRAD_TOL"]

MAX_HALVINGS = 20
DEFAULT_GRAD_TOL = 1e-12

_IDENTITY = (lambda p: p, lambda p: np.ones_like(p))
_BEER_LAMBERT = (_response, _response_deriv)


@dataclass
class Trajectory:
    """Per-iteration record of a descent run.

    Arrays have length ``n_iter + 1`` (the t = 0 row is the zero start).
    ``err`` holds ``||z_t - x_ref||`` and is NaN-filled when no reference
    signal was given.  ``steps`` records the step size actually taken at
    each t >= 1 (0.0 in the t = 0 slot), which exposes any halving events;
    ``halvings`` counts them over the whole run.
    """

    iters: np.ndarray
    loss: np.ndarray
    grad_norm: np.ndarray
    err: np.ndarray
    time_ms: np.ndarray
    steps: np.ndarray
    z: np.ndarray
    converged: bool
    halvings: int
    has_err: bool

    @property
    def n_iter(self):
        return self.iters.size - 1

    def final_error(self):
        if not self.has_err:
            raise ValueError("trajectory has no error column (no x_ref given)")
        return float(self.err[-1])

    def to_csv(self, path):
        header = "iter,err,loss,grad_norm,time_ms"
        data = np.column_stack([self.iters, self.err, self.loss,
                                self.grad_norm, self.time_ms])
        np.savetxt(path, data, delimiter=",", header=header, comments="",
                   fmt=["%d", "%.17g", "%.17g", "%.17g", "%.3f"])


def _run(op, y, schedule, max_iter, tol, x_ref, constraint, response,
         reg_lambda=0.0, grid_shape=None, nonneg_clamp=False, tv_eps=TV_SMOOTH_EPS):
    yv = _measurement_values(y)
    if yv.size != op.m:
        raise ValueError("measurement length does not match operator rows")
    value_fn, deriv_fn = response
    m = yv.size
    xv = None if x_ref is None else _as_values(x_ref)
    if xv is not None and xv.size != op.n:
        raise ValueError("x_ref length does not match operator columns")
    if reg_lambda > 0.0 and grid_shape is None:
        raise ValueError("regularized run needs a grid shape for total variation")

    def objective_parts(z, p):
        r = value_fn(p) - yv
        data = float(r @ r) / (2.0 * m)
        if reg_lambda > 0.0:
            data += reg_lambda * total_variation(z.reshape(grid_shape), eps=tv_eps)
        return data

    def gradient(z, p):
        w = deriv_fn(p) * (value_fn(p) - yv)
        g = op.apply_transpose(w) / m
        if reg_lambda > 0.0:
            g = g + reg_lambda * tv_subgradient(z.reshape(grid_shape), eps=tv_eps)
        return g

    t_start = time.perf_counter()
    z = np.zeros(op.n)
    p = op.apply(z)
    cur_loss = objective_parts(z, p)
    g = gradient(z, p)
    gn = float(np.linalg.norm(g))

    rec_iter = [0]
    rec_loss = [cur_loss]
    rec_gn = [gn]
    rec_err = [np.nan if xv is None else float(np.linalg.norm(z - xv))]
    rec_ms = [(time.perf_counter() - t_start) * 1e3]
    rec_step = [0.0]

    halvings = 0
    converged = gn <= tol

    t = 0
    while not converged and t < max_iter:
        t += 1
        mu = schedule.step(t)

        tried = 0
        stalled = False
        while True:
            z_new = z - mu * g
            if constraint is not None:
                z_new = project(constraint, z_new)
            if nonneg_clamp:
                z_new = np.maximum(z_new, 0.0)
            p_new = op.apply(z_new)
            new_loss = objective_parts(z_new, p_new)
            if not np.isfinite(new_loss):
                raise DivergenceError(f"non-finite loss at iteration {t}", t)
            # retry a t > 1 step with half the size when it increases the objective
            if t > 1 and new_loss > cur_loss and schedule.mode != "custom":
                if tried >= MAX_HALVINGS:
                    stalled = True
                    break
                mu *= 0.5
                tried += 1
                halvings += 1
                continue
            break
        if stalled:
            # no decrease achievable within the halving budget: stop here
            break

        z, p, cur_loss = z_new, p_new, new_loss
        g = gradient(z, p)
        gn = float(np.linalg.norm(g))
        rec_iter.append(t)
        rec_loss.append(cur_loss)
        rec_gn.append(gn)
        rec_err.append(np.nan if xv is None else float(np.linalg.norm(z - xv)))
        rec_ms.append((time.perf_counter() - t_start) * 1e3)
        rec_step.append(mu)
        converged = gn <= tol

    return Trajectory(
        iters=np.asarray(rec_iter, dtype=np.int64),
        loss=np.asarray(rec_loss),
        grad_norm=np.asarray(rec_gn),
        err=np.asarray(rec_err),
        time_ms=np.asarray(rec_ms),
        steps=np.asarray(rec_step),
        z=z,
        converged=converged,
        halvings=halvings,
        has_err=xv is not None,
    )


def gradient_descent(op, y, schedule, max_iter=10000, tol=DEFAULT_GRAD_TOL, x_ref=None):
    """Minimize the nonlinear least-squares loss by plain gradient descent.

    Runs ``z_t = z_{t-1} - mu_t * grad(z_{t-1})`` from ``z_0 = 0`` until the
    gradient norm drops to ``tol`` or ``max_iter`` is reached.  Raises
    :class:`DivergenceError` if the loss turns non-finite.
    """
    if tol < 0:
        raise ValueError("tol must be >= 0")
    return _run(op, y, schedule, max_iter, tol, x_ref, None, _BEER_LAMBERT)


def projected_gradient_descent(op, y, schedule, constraint, max_iter=10000,
                               tol=DEFAULT_GRAD_TOL, x_ref=None):
    """Gradient descent with Euclidean projection after every step.

    ``constraint`` is a :class:`~nlct.optimize.projections.ConstraintSet`;
    a full-space constraint reproduces :func:`gradient_descent` exactly.
    """
    if tol < 0:
        raise ValueError("tol must be >= 0")
    if not isinstance(constraint, ConstraintSet):
        raise TypeError("constraint must be a ConstraintSet")
    return _run(op, y, schedule, max_iter, tol, x_ref, constraint, _BEER_LAMBERT)


def regularized_descent(op, y, schedule, reg_lambda, max_iter=500,
                        tol=DEFAULT_GRAD_TOL, x_ref=None, geometry=None,
                        linearized=False, nonneg=True, tv_eps=TV_SMOOTH_EPS):
    """Volumetric solver: data loss + ``reg_lambda`` * smoothed TV, nonneg clamp.

    With ``linearized=True`` the forward response is the identity, i.e. the
    measurements are treated as already log-linearized line integrals and the
    data term is ``sum((<a_i, z> - y_i)**2) / (2m)``; everything else (steps,
    TV, clamping) is shared, so comparisons isolate the measurement model.

    ``geometry`` (a GridGeometry or dims tuple) is needed for TV when the
    operator does not carry grid dims itself.  ``tv_eps`` sets the TV
    smoothing; larger values tame the bang-bang subgradient in flat regions
    at the cost of a softer penalty.
    """
    if reg_lambda < 0:
        raise ValueError("reg_lambda must be >= 0")
    shape = None
    if reg_lambda > 0.0:
        if geometry is not None:
            shape = tuple(getattr(geometry, "dims", geometry))
        elif hasattr(op, "dims"):
            shape = tuple(op.dims)
        elif hasattr(op, "n_pix"):
            shape = (op.n_pix, op.n_pix)
        else:
            raise ValueError("cannot infer grid shape; pass geometry=")
    response = _IDENTITY if linearized else _BEER_LAMBERT
    return _run(op, y, schedule, max_iter, tol, x_ref, None, response,
                reg_lambda=reg_lambda, grid_shape=shape, nonneg_clamp=nonneg,
                tv_eps=tv_eps)
