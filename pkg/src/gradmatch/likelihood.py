"""Generalised log-likelihood, normalised slices/grids, chi-square thresholds.

The objective combines a Gaussian data term with a gradient-matching penalty:

    loglik(theta) = sum_i log phi(y_obs_i; y_spline_i, sigma^2)
                    - w * sum_j (D y_j - f(t_j, y, theta))^2

evaluated at a fixed fitted spline. Surfaces report the normalised form
(shifted so the maximum over the fit's MLE is zero).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammainc


@dataclass(frozen=True)
class LoglikConfig:
    """Known noise variance and penalty weight for likelihood evaluation."""

    noise_variance: float = 0.05 ** 2
    weight: float = 0.0

    def __post_init__(self):
        if self.noise_variance <= 0:
            raise ValueError("noise variance must be positive")
        if self.weight < 0:
            raise ValueError("weight must be nonnegative")


@dataclass(frozen=True)
class LoglikSurface:
    """Normalised log-likelihood values on a 1-D or 2-D parameter grid."""

    axes: tuple[np.ndarray, ...]
    values: np.ndarray
    mle_theta: np.ndarray
    mle_loglik: float


def gaussian_loglik_sum(residuals, sigma2: float) -> float:
    """Sum of IID Gaussian log densities for the given residuals."""
    if sigma2 <= 0:
        raise ValueError("sigma2 must be positive")
    r = np.asarray(residuals, dtype=float)
    return float(np.sum(-0.5 * math.log(2.0 * math.pi * sigma2) - r * r / (2.0 * sigma2)))


def _operator_values(state, model) -> np.ndarray:
    """Per-component differentiated spline values, (J, K)."""
    cols = []
    for k, order in enumerate(model.diff_order):
        src = state.spline_second_derivs if order == 2 else state.spline_derivs
        cols.append(src[:, k])
    return np.column_stack(cols)


def ode_penalty(state, system, model, theta) -> float:
    """Sum over the fine grid of squared ODE residuals (D y - f)^2."""
    fine = system.basis.fine_grid
    f = model.rhs(fine, state.spline_values, state.spline_derivs, np.asarray(theta, dtype=float))
    resid = _operator_values(state, model) - f
    return float(np.sum(resid * resid))


def generalised_loglik(data, state, theta, config: LoglikConfig, model, system) -> float:
    """Data log density minus the weighted ODE penalty, at a fixed spline.

    Raises when theta falls outside the model's parameter bounds rather than
    clamping silently.
    """
    theta = model.check_bounds(theta)
    obs_fit = system.basis.B_obs @ state.beta
    data_term = gaussian_loglik_sum(obs_fit - data.values, config.noise_variance)
    return data_term - config.weight * ode_penalty(state, system, model, theta)


def loglik_slice(data, state, system, model, config, param_index: int, grid,
                 theta_hat) -> LoglikSurface:
    """Normalised log-likelihood along one parameter, others pinned at theta_hat."""
    grid = np.asarray(grid, dtype=float)
    theta_hat = model.check_bounds(theta_hat)
    lo, hi = model.param_bounds[param_index]
    if grid.min() < lo or grid.max() > hi:
        raise ValueError("slice grid extends outside parameter bounds")
    if not (grid.min() <= theta_hat[param_index] <= grid.max()):
        raise ValueError("slice grid must cover the MLE coordinate")

    ref = generalised_loglik(data, state, theta_hat, config, model, system)
    vals = np.empty(grid.size)
    for i, g in enumerate(grid):
        th = theta_hat.copy()
        th[param_index] = g
        vals[i] = generalised_loglik(data, state, th, config, model, system) - ref
    return LoglikSurface(axes=(grid,), values=vals, mle_theta=theta_hat, mle_loglik=ref)


def loglik_grid_2d(data, state, system, model, config, grid1, grid2,
                   theta_hat) -> LoglikSurface:
    """Normalised log-likelihood on a tensor grid for a two-parameter model.

    values[i, j] corresponds to (grid1[i], grid2[j]); exports iterate grid1 as
    the outer (row-major) axis.
    """
    if len(model.param_names) != 2:
        raise ValueError("2-D grids require a model with exactly two parameters")
    grid1 = np.asarray(grid1, dtype=float)
    grid2 = np.asarray(grid2, dtype=float)
    theta_hat = model.check_bounds(theta_hat)
    for g, (lo, hi) in zip((grid1, grid2), model.param_bounds):
        if g.min() < lo or g.max() > hi:
            raise ValueError("grid extends outside parameter bounds")

    ref = generalised_loglik(data, state, theta_hat, config, model, system)
    vals = np.empty((grid1.size, grid2.size))
    for i, g1 in enumerate(grid1):
        for j, g2 in enumerate(grid2):
            vals[i, j] = generalised_loglik(
                data, state, np.array([g1, g2]), config, model, system) - ref
    return LoglikSurface(axes=(grid1, grid2), values=vals,
                         mle_theta=theta_hat, mle_loglik=ref)


def chi2_threshold(dof: int, quantile: float) -> float:
    """Normalised log-likelihood level bounding an approximate confidence set.

    Returns -Delta/2 where Delta is the ``quantile`` quantile of chi-square
    with ``dof`` degrees of freedom. dof = 2 has the closed form
    Delta = -2 ln(1 - q); dof 1 and 3 bisect the regularized incomplete gamma
    CDF to 1e-8.
    """
    if dof not in (1, 2, 3):
        raise ValueError("dof must be 1, 2, or 3")
    if not (0.0 < quantile < 1.0):
        raise ValueError("quantile must be in (0, 1)")
    if dof == 2:
        return math.log1p(-quantile)

    def cdf(x):
        return gammainc(dof / 2.0, x / 2.0)

    lo, hi = 0.0, 1.0
    while cdf(hi) < quantile:
        hi *= 2.0
    while hi - lo > 1e-8:
        mid = 0.5 * (lo + hi)
        if cdf(mid) < quantile:
            lo = mid
        else:
            hi = mid
    return -0.25 * (lo + hi)
