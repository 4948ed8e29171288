"""Descent solvers, step schedules, projections, and regularizers."""

from .projections import (ConstraintSet, project, project_l1_ball, project_nonneg,
                          project_nonneg_l1, l1_ball, nonneg, nonneg_l1, full_space)
from .regularizers import total_variation, tv_subgradient, TV_SMOOTH_EPS
from .schedules import (DEFAULT_BASE_STEP, StepSchedule, step_size_mu1,
                        mean_absorption, estimate_signal_norm,
                        operator_scale, auto_schedule)
from .descent import (Trajectory, gradient_descent, projected_gradient_descent,
                      regularized_descent, MAX_HALVINGS, DEFAULT_GRAD_TOL)

__all__ = [
    "ConstraintSet", "project", "project_l1_ball", "project_nonneg",
    "project_nonneg_l1", "l1_ball", "nonneg", "nonneg_l1", "full_space",
    "total_variation", "tv_subgradient", "TV_SMOOTH_EPS",
    "DEFAULT_BASE_STEP", "StepSchedule", "step_size_mu1",
    "mean_absorption", "estimate_signal_norm", "operator_scale", "auto_schedule",
    "Trajectory", "gradient_descent", "projected_gradient_descent",
    "regularized_descent", "MAX_HALVINGS", "DEFAULT_GRAD_TOL",
]
