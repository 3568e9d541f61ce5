"""The generalised-profiling cascade.

Starting from a pure interpolant (weight 0), each iteration re-solves a
stacked linear least-squares system whose top block ties the spline to the
data and whose bottom block ties the spline's finite-difference derivative to
the model right-hand side evaluated on the previous iterate, then refreshes
the parameter estimate against the new spline, and finally adapts the penalty
weight to the ratio of data mismatch to model mismatch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .basis import (BasisMatrices, DiffMatrix, KnotVector, diff_matrix,
                    eval_basis, make_knots, solve_least_squares)
from .datagen import Dataset, InitialConditions
from .models import OdeModel
from .optimizer import OptimizerOptions, minimize

W_INITIAL = 1e-2
W_MAX = 1e3
SIGMA_M_FLOOR = 1e-12


@dataclass(frozen=True)
class SplineSystem:
    """Knots plus every matrix the iteration needs, built once per dataset."""

    obs_times: np.ndarray
    knots: KnotVector
    basis: BasisMatrices
    d1: DiffMatrix
    d2: DiffMatrix


@dataclass(frozen=True)
class ProfilerState:
    """Snapshot of one completed iteration."""

    n: int
    w: float
    beta: np.ndarray               # (n_basis, K), one coefficient block per component
    theta_hat: np.ndarray
    sigma_D: float
    sigma_M: float
    spline_values: np.ndarray      # (J, K)
    spline_derivs: np.ndarray      # (J, K), first differences
    spline_second_derivs: np.ndarray | None = None


@dataclass(frozen=True)
class TraceRow:
    n: int
    w: float
    theta_hat: tuple[float, ...]
    sigma_D: float
    sigma_M: float
    delta_y: float
    flag: str = ""


@dataclass(frozen=True)
class FitOptions:
    n_basis: int | None = None
    fine_grid_size: int | None = None
    n_max: int = 20
    tol_y: float = 1e-3
    tol_theta: float = 1e-3
    w1: float = W_INITIAL
    weight_rule: str = "std-ratio"
    w_max: float = W_MAX
    sigma_m_floor: float = SIGMA_M_FLOOR
    optimizer: OptimizerOptions | None = None

    def __post_init__(self):
        if self.weight_rule not in ("std-ratio", "var-ratio"):
            raise ValueError("weight_rule must be 'std-ratio' or 'var-ratio'")


@dataclass(frozen=True)
class FitResult:
    theta_hat: np.ndarray
    final_state: ProfilerState
    trace: tuple[TraceRow, ...]
    initial_conditions: InitialConditions
    converged: bool
    reason: str


def default_fine_size(n_obs: int) -> int:
    return max(5 * n_obs + 1, 201)


def build_spline_system(obs_times, n_basis: int | None = None,
                        fine_grid_size: int | None = None) -> SplineSystem:
    """Construct knots, basis matrices, and differentiation matrices."""
    obs = np.asarray(obs_times, dtype=float)
    M = int(n_basis) if n_basis is not None else obs.size
    J = int(fine_grid_size) if fine_grid_size is not None else default_fine_size(obs.size)
    knots = make_knots(obs, M)
    fine = np.linspace(obs[0], obs[-1], J)
    basis = BasisMatrices(B=eval_basis(knots, fine), B_obs=eval_basis(knots, obs),
                          n_basis=M, fine_grid=fine)
    return SplineSystem(obs_times=obs, knots=knots, basis=basis,
                        d1=diff_matrix(fine, 1), d2=diff_matrix(fine, 2))


def _operator_columns(state: ProfilerState, model: OdeModel) -> np.ndarray:
    cols = []
    for k, order in enumerate(model.diff_order):
        src = state.spline_second_derivs if order == 2 else state.spline_derivs
        cols.append(src[:, k])
    return np.column_stack(cols)


def _make_state(n, w, beta, theta, data: Dataset, system: SplineSystem,
                model: OdeModel) -> ProfilerState:
    yf = system.basis.B @ beta
    d1y = system.d1.matrix @ yf
    d2y = system.d2.matrix @ yf if 2 in model.diff_order else None
    state = ProfilerState(n=n, w=float(w), beta=beta, theta_hat=np.asarray(theta, dtype=float),
                          sigma_D=0.0, sigma_M=0.0, spline_values=yf, spline_derivs=d1y,
                          spline_second_derivs=d2y)
    return replace(state,
                   sigma_D=compute_sigma_D(state, data, system),
                   sigma_M=compute_sigma_M(state, system, model))


def initial_fit(data: Dataset, system: SplineSystem, theta0) -> ProfilerState:
    """Weight-0 fit: per-component interpolation of the data by the spline.

    No model is involved at weight 0, so the returned state carries
    sigma_M = 0 as a placeholder; call :func:`compute_sigma_M` to evaluate it
    against a model.
    """
    I = data.times.size
    M = system.basis.n_basis
    if M != I:
        raise ValueError(f"square collocation needed: {M} basis functions vs {I} observations")
    model_free_beta = np.column_stack(
        [solve_least_squares(system.basis.B_obs, data.values[:, k]) for k in range(data.K)])
    yf = system.basis.B @ model_free_beta
    d1y = system.d1.matrix @ yf
    d2y = system.d2.matrix @ yf
    state = ProfilerState(n=0, w=0.0, beta=model_free_beta,
                          theta_hat=np.asarray(theta0, dtype=float), sigma_D=0.0, sigma_M=0.0,
                          spline_values=yf, spline_derivs=d1y, spline_second_derivs=d2y)
    return replace(state, sigma_D=compute_sigma_D(state, data, system))


def build_stacked_system(state: ProfilerState, data: Dataset, system: SplineSystem,
                         model: OdeModel, weight: float | None = None):
    """Assemble the (I+J)K x MK block-diagonal least-squares system.

    Per component, the top rows reproduce the observations and the bottom rows
    are weight * (D_order B) with right-hand side weight * f evaluated at the
    previous spline and previous parameter estimate. Components stay uncoupled
    on the left; coupling enters only through f on the right.
    """
    w = state.w if weight is None else float(weight)
    B, B_obs = system.basis.B, system.basis.B_obs
    J, M = B.shape
    I = B_obs.shape[0]
    K = model.K
    if data.values.shape != (I, K) or state.spline_values.shape != (J, K):
        raise ValueError("shape mismatch between data, state, and system")

    f_prev = model.rhs(system.basis.fine_grid, state.spline_values,
                       state.spline_derivs, state.theta_hat)
    A = np.zeros(((I + J) * K, M * K))
    b = np.empty((I + J) * K)
    for k in range(K):
        op = system.d2.matrix if model.diff_order[k] == 2 else system.d1.matrix
        r0, c0 = k * (I + J), k * M
        A[r0:r0 + I, c0:c0 + M] = B_obs
        A[r0 + I:r0 + I + J, c0:c0 + M] = w * (op @ B)
        b[r0:r0 + I] = data.values[:, k]
        b[r0 + I:r0 + I + J] = w * f_prev[:, k]
    return A, b


def mle_step(state: ProfilerState, data: Dataset, system: SplineSystem, model: OdeModel,
             config=None, optimizer_opts: OptimizerOptions | None = None) -> np.ndarray:
    """Parameter refresh at a fixed spline.

    The data term of the generalised log-likelihood does not involve theta at
    a fixed spline, so maximizing it is the same as minimizing the summed
    squared ODE residual; the tests assert that equivalence. ``config`` is
    accepted for signature parity and unused.
    """
    opvals = _operator_columns(state, model)
    fine = system.basis.fine_grid

    def objective(theta):
        f = model.rhs(fine, state.spline_values, state.spline_derivs, theta)
        r = opvals - f
        return float(np.sum(r * r))

    opts = optimizer_opts or OptimizerOptions()
    if opts.bounds is None:
        opts = replace(opts, bounds=model.param_bounds)
    result = minimize(objective, state.theta_hat, opts)
    return result.x


def compute_sigma_D(state: ProfilerState, data: Dataset, system: SplineSystem) -> float:
    """Root mean square data mismatch, normalized by IK - 1."""
    IK = data.values.size
    if IK < 2:
        raise ValueError("need at least two scalar observations")
    r = system.basis.B_obs @ state.beta - data.values
    return math.sqrt(float(np.sum(r * r)) / (IK - 1))


def compute_sigma_M(state: ProfilerState, system: SplineSystem, model: OdeModel) -> float:
    """Root mean square ODE-residual mismatch on the fine grid, normalized by JK - 1."""
    J = system.basis.fine_grid.size
    JK = J * model.K
    if JK < 2:
        raise ValueError("need at least two fine-grid rows")
    f = model.rhs(system.basis.fine_grid, state.spline_values,
                  state.spline_derivs, state.theta_hat)
    r = _operator_columns(state, model) - f
    return math.sqrt(float(np.sum(r * r)) / (JK - 1))


def update_weight(sigma_D: float, sigma_M: float, rule: str = "std-ratio",
                  sigma_m_floor: float = SIGMA_M_FLOOR, w_max: float = W_MAX) -> float:
    """Next penalty weight: sigma_D / sigma_M, guarded.

    When sigma_M sits below the floor the ratio is meaningless (the spline
    already satisfies the model essentially exactly) and the cap w_max is
    returned; the fit loop records that in the trace. The variance-ratio
    variant squares the ratio.
    """
    if sigma_M < sigma_m_floor:
        return w_max
    ratio = sigma_D / sigma_M
    if rule == "var-ratio":
        ratio = ratio * ratio
    return min(ratio, w_max)


def extract_initial_conditions(state: ProfilerState, system: SplineSystem,
                               model: OdeModel) -> InitialConditions:
    """Spline value at the trajectory start, and its first-difference
    derivative there for second-order components."""
    values = tuple(float(v) for v in state.spline_values[0])
    derivs = tuple(float(state.spline_derivs[0, k])
                   for k, order in enumerate(model.diff_order) if order == 2)
    return InitialConditions(values=values, derivatives=derivs or None)


def fit(data: Dataset, model: OdeModel, theta0, opts: FitOptions | None = None) -> FitResult:
    """Run the full profiling iteration and record a complete trace.

    Iteration n solves the stacked system at weight w_n using f from iterate
    n-1, refreshes theta against the new spline, computes sigma_D and sigma_M
    there, and sets w_{n+1} to their ratio; w_1 is pinned to 1e-2. The loop
    stops once both the fine-grid spline change (relative to the observed data
    range) and the parameter change drop to 1e-3, or at n_max. Non-convergence
    is reported in the result, not raised.
    """
    opts = opts or FitOptions()
    theta0 = model.check_bounds(theta0)
    if data.K != model.K:
        raise ValueError(f"dataset has {data.K} components, model {model.name} needs {model.K}")
    system = build_spline_system(data.times, opts.n_basis, opts.fine_grid_size)

    state = initial_fit(data, system, theta0)
    state = replace(state, sigma_M=compute_sigma_M(state, system, model))
    trace = [TraceRow(n=0, w=0.0, theta_hat=tuple(float(v) for v in theta0),
                      sigma_D=state.sigma_D, sigma_M=state.sigma_M, delta_y=float("nan"))]

    data_range = float(data.values.max() - data.values.min())
    if data_range <= 0:
        data_range = 1.0

    converged = False
    reason = "maximum iterations reached without convergence"
    w_next = float(opts.w1)
    for n in range(1, opts.n_max + 1):
        A, b = build_stacked_system(state, data, system, model, weight=w_next)
        beta_flat = solve_least_squares(A, b)
        beta = beta_flat.reshape(model.K, system.basis.n_basis).T

        interim = _make_state(n, w_next, beta, state.theta_hat, data, system, model)
        theta_n = mle_step(interim, data, system, model, optimizer_opts=opts.optimizer)
        new_state = _make_state(n, w_next, beta, theta_n, data, system, model)

        delta_y = float(np.max(np.abs(new_state.spline_values - state.spline_values))) / data_range
        delta_theta = float(np.max(np.abs(theta_n - state.theta_hat)))

        flag = ""
        done = delta_y <= opts.tol_y and delta_theta <= opts.tol_theta
        if not done and n < opts.n_max:
            w_next = update_weight(new_state.sigma_D, new_state.sigma_M, opts.weight_rule,
                                   opts.sigma_m_floor, opts.w_max)
            if w_next == opts.w_max:
                flag = "w_capped"
        trace.append(TraceRow(n=n, w=new_state.w,
                              theta_hat=tuple(float(v) for v in theta_n),
                              sigma_D=new_state.sigma_D, sigma_M=new_state.sigma_M,
                              delta_y=delta_y, flag=flag))
        state = new_state
        if done:
            converged = True
            reason = f"tolerances met at iteration {n}"
            break

    return FitResult(theta_hat=state.theta_hat, final_state=state, trace=tuple(trace),
                     initial_conditions=extract_initial_conditions(state, system, model),
                     converged=converged, reason=reason)
