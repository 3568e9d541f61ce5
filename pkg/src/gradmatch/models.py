"""ODE model abstraction and the two built-in case studies.

A model supplies the residual decomposition D y = f(t, y, theta), where D is
the per-component differential operator (d/dt or d^2/dt^2). For the
second-order oscillator the damping and stiffness terms are folded into f and
evaluated on the previous spline iterate, which keeps the stacked
least-squares system linear in the spline coefficients.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

FORCING_SWITCH_TIME = 25.0


@dataclass(frozen=True)
class OdeModel:
    """Component count, operator orders, rhs decomposition, and parameter box."""

    name: str
    K: int
    diff_order: tuple[int, ...]
    param_names: tuple[str, ...]
    param_bounds: tuple[tuple[float, float], ...]
    rhs: Callable[[np.ndarray, np.ndarray, np.ndarray, np.ndarray], np.ndarray]
    true_params: tuple[float, ...] | None = field(default=None)

    def __post_init__(self):
        if len(self.diff_order) != self.K:
            raise ValueError("one operator order per component required")
        for lo, hi in self.param_bounds:
            if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
                raise ValueError("parameter bounds must be finite with lo < hi")

    def check_bounds(self, theta) -> np.ndarray:
        th = np.asarray(theta, dtype=float)
        if th.shape != (len(self.param_names),):
            raise ValueError(f"expected {len(self.param_names)} parameters for {self.name}")
        for v, (lo, hi) in zip(th, self.param_bounds):
            if not (lo <= v <= hi):
                raise ValueError(f"parameter value {v} outside bounds [{lo}, {hi}]")
        return th


def heaviside_force(t):
    """Step forcing F(t) = 1 - H(t - 25), with H(0) := 1 so F(25) = 0."""
    return np.where(np.asarray(t, dtype=float) < FORCING_SWITCH_TIME, 1.0, 0.0)


def oscillator_rhs(t_grid, x, dx, theta) -> np.ndarray:
    """f for the damped driven oscillator, f = (F(t) - c*dx - k*x) / m.

    The residual form is D2 x - f with D2 the second-derivative operator,
    equivalent to m x'' + c x' + k x = F(t). Parameter order is (m, c, k).
    """
    m, c, k = theta
    if m == 0:
        raise ValueError("oscillator mass must be nonzero")
    return (heaviside_force(t_grid) - c * np.asarray(dx) - k * np.asarray(x)) / m


def lotka_volterra_rhs(t_grid, a, b, theta) -> tuple[np.ndarray, np.ndarray]:
    """Dimensionless predator-prey rhs: a' = alpha*a - a*b, b' = delta*a*b - b."""
    alpha, delta = theta
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return alpha * a - a * b, delta * a * b - b


def model_f_stack(model: OdeModel, fine_grid, spline_values, spline_first_derivs, theta) -> np.ndarray:
    """Concatenate per-component f evaluations in component-major order."""
    values = np.asarray(spline_values, dtype=float)
    derivs = np.asarray(spline_first_derivs, dtype=float)
    J = len(np.asarray(fine_grid))
    if values.shape != (J, model.K) or derivs.shape != (J, model.K):
        raise ValueError("state arrays must have shape (J, K)")
    f = model.rhs(np.asarray(fine_grid, dtype=float), values, derivs, np.asarray(theta, dtype=float))
    return np.concatenate([f[:, k] for k in range(model.K)])


def _oscillator_rhs_grid(t, values, derivs, theta):
    return oscillator_rhs(t, values[:, 0], derivs[:, 0], theta)[:, None]


def _lv_rhs_grid(t, values, derivs, theta):
    fa, fb = lotka_volterra_rhs(t, values[:, 0], values[:, 1], theta)
    return np.column_stack([fa, fb])


OSCILLATOR = OdeModel(
    name="oscillator",
    K=1,
    diff_order=(2,),
    param_names=("m", "c", "k"),
    param_bounds=((0.01, 10.0), (0.01, 10.0), (0.01, 10.0)),
    rhs=_oscillator_rhs_grid,
    true_params=(1.0, 0.2, 1.0),
)

LOTKA_VOLTERRA = OdeModel(
    name="lotka-volterra",
    K=2,
    diff_order=(1, 1),
    param_names=("alpha", "delta"),
    param_bounds=((0.01, 10.0), (0.01, 10.0)),
    rhs=_lv_rhs_grid,
    true_params=(1.0, 1.0),
)

_REGISTRY = {m.name: m for m in (OSCILLATOR, LOTKA_VOLTERRA)}


def get_model(name: str) -> OdeModel:
    try:
        return _REGISTRY[name]
    except KeyError:
        raise ValueError(f"unknown model {name!r}; available: {sorted(_REGISTRY)}") from None
