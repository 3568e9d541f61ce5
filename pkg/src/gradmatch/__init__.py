"""Gradient matching for ODE parameter inference.

Fits a cubic B-spline (plus constant) representation to observed trajectories
and estimates ODE parameters by penalizing the mismatch between the spline's
derivatives and the model right-hand side on a fine grid, without ever
running an initial-value solver. The data/model weight is updated from the
ratio of data-fit to model-fit standard deviations until both the spline and
the parameter estimate stop moving.
"""

from .basis import (BasisMatrices, DiffMatrix, KnotVector, SPLINE_ORDER,
                    diff_matrix, eval_basis, eval_basis_derivative, make_knots,
                    solve_least_squares)
from .datagen import (Dataset, InitialConditions, generate_dataset,
                      oscillator_analytic, read_dataset, rk4_integrate,
                      write_dataset)
from .likelihood import (LoglikConfig, LoglikSurface, chi2_threshold,
                         gaussian_loglik_sum, generalised_loglik,
                         loglik_grid_2d, loglik_slice, ode_penalty)
from .models import (LOTKA_VOLTERRA, OSCILLATOR, FORCING_SWITCH_TIME, OdeModel,
                     get_model, heaviside_force, lotka_volterra_rhs,
                     model_f_stack, oscillator_rhs)
from .optimizer import MinimizeResult, OptimizerOptions, minimize
from .profiler import (FitOptions, FitResult, ProfilerState, SplineSystem,
                       TraceRow, build_spline_system, build_stacked_system,
                       compute_sigma_D, compute_sigma_M,
                       extract_initial_conditions, fit, initial_fit, mle_step,
                       update_weight)

__version__ = "0.1.0"

__all__ = [
    "BasisMatrices", "DiffMatrix", "KnotVector", "SPLINE_ORDER", "diff_matrix",
    "eval_basis", "eval_basis_derivative", "make_knots", "solve_least_squares",
    "Dataset", "InitialConditions", "generate_dataset", "oscillator_analytic",
    "read_dataset", "rk4_integrate", "write_dataset",
    "LoglikConfig", "LoglikSurface", "chi2_threshold", "gaussian_loglik_sum",
    "generalised_loglik", "loglik_grid_2d", "loglik_slice", "ode_penalty",
    "LOTKA_VOLTERRA", "OSCILLATOR", "FORCING_SWITCH_TIME", "OdeModel",
    "get_model", "heaviside_force", "lotka_volterra_rhs", "model_f_stack",
    "oscillator_rhs",
    "MinimizeResult", "OptimizerOptions", "minimize",
    "FitOptions", "FitResult", "ProfilerState", "SplineSystem", "TraceRow",
    "build_spline_system", "build_stacked_system", "compute_sigma_D",
    "compute_sigma_M", "extract_initial_conditions", "fit", "initial_fit",
    "mle_step", "update_weight",
    "__version__",
]
