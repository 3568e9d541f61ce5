"""Cubic B-spline-plus-constant basis, finite-difference operators, least squares.

The function space used throughout is the span of (n_basis - 1) clamped cubic
B-splines together with the constant function 1. A full clamped cubic family
on n_int interior breakpoints contains n_int + 4 splines and already sums to
one everywhere, so appending a constant column would create an exact rank
deficiency. We therefore drop the first cubic of the full family; since
b_0 = 1 - sum(b_i, i >= 1) on the whole domain, the span is unchanged and the
resulting n_basis columns are linearly independent.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import BSpline
from scipy.linalg import lstsq as _lstsq

SPLINE_ORDER = 4  # cubic
_DEGREE = SPLINE_ORDER - 1


@dataclass(frozen=True)
class KnotVector:
    """Clamped cubic knot configuration over a closed time domain."""

    interior_breakpoints: np.ndarray
    domain: tuple[float, float]
    order: int = SPLINE_ORDER

    def __post_init__(self):
        bp = np.asarray(self.interior_breakpoints, dtype=float)
        object.__setattr__(self, "interior_breakpoints", bp)
        a, b = self.domain
        if bp.size and not np.all(np.diff(bp) > 0):
            raise ValueError("interior breakpoints must be strictly ascending")
        if bp.size and (bp[0] <= a or bp[-1] >= b):
            raise ValueError("interior breakpoints must lie strictly inside the domain")

    @property
    def full_knots(self) -> np.ndarray:
        """Knot sequence with order-fold repeated boundary knots."""
        a, b = self.domain
        return np.concatenate([[a] * self.order, self.interior_breakpoints, [b] * self.order])

    @property
    def n_basis(self) -> int:
        """Total basis size: (n_interior + 3) cubics plus the constant."""
        return len(self.interior_breakpoints) + 4


@dataclass(frozen=True)
class BasisMatrices:
    """Basis evaluations at the observation grid and a fine grid."""

    B: np.ndarray
    B_obs: np.ndarray
    n_basis: int
    fine_grid: np.ndarray


@dataclass(frozen=True)
class DiffMatrix:
    """Dense finite-difference differentiation matrix on a uniform grid."""

    order: int
    matrix: np.ndarray
    grid_spacing: float


def make_knots(obs_times: np.ndarray, n_basis: int) -> KnotVector:
    """Build the knot vector for a basis of ``n_basis`` functions.

    The basis consists of n_basis - 1 clamped cubic B-splines plus the
    constant, which requires n_basis - 4 interior breakpoints. When the
    observation times are themselves equispaced and supply enough interior
    sites, breakpoints are placed on interior observation times (centred
    selection); this keeps the square observation-collocation matrix well
    conditioned. Otherwise breakpoints fall back to a uniform partition of
    the data span. Either way the interior breakpoints come out equally
    spaced for equispaced designs.
    """
    obs = np.asarray(obs_times, dtype=float)
    if obs.ndim != 1 or np.unique(obs).size < 2:
        raise ValueError("need at least two distinct observation times")
    if n_basis < 5:
        raise ValueError("n_basis must be at least 5 for a cubic basis")
    a, b = float(obs[0]), float(obs[-1])
    n_int = n_basis - 4

    candidates = obs[1:-1]
    steps = np.diff(obs)
    equispaced = steps.size > 0 and np.allclose(steps, steps[0], rtol=1e-9, atol=0.0)
    if equispaced and candidates.size >= n_int:
        trim = (candidates.size - n_int) // 2
        interior = candidates[trim:trim + n_int]
    else:
        interior = np.linspace(a, b, n_int + 2)[1:-1]
    return KnotVector(interior_breakpoints=interior, domain=(a, b))


def eval_basis(knots: KnotVector, points: np.ndarray) -> np.ndarray:
    """Evaluate all basis functions at ``points``.

    Returns a (len(points), n_basis) matrix whose last column is the constant
    function; the remaining columns are the clamped cubic family with its
    first member dropped. Rows contain at most five nonzeros (four overlapping
    cubic supports plus the constant).
    """
    pts = np.asarray(points, dtype=float)
    a, b = knots.domain
    if pts.size and (pts.min() < a or pts.max() > b):
        raise ValueError("evaluation point outside the knot domain")
    full = BSpline.design_matrix(pts, knots.full_knots, _DEGREE, extrapolate=False).toarray()
    out = np.empty((pts.size, knots.n_basis))
    out[:, :-1] = full[:, 1:]
    out[:, -1] = 1.0
    return out


def eval_basis_derivative(knots: KnotVector, points: np.ndarray, deriv_order: int) -> np.ndarray:
    """Analytic spline derivatives of every basis column at ``points``.

    Cross-check utility only; the fitting pipeline differentiates splines with
    finite-difference matrices instead (see :func:`diff_matrix`).
    """
    pts = np.asarray(points, dtype=float)
    a, b = knots.domain
    if pts.size and (pts.min() < a or pts.max() > b):
        raise ValueError("evaluation point outside the knot domain")
    t = knots.full_knots
    n_cubics = len(t) - SPLINE_ORDER
    out = np.zeros((pts.size, knots.n_basis))
    for j in range(1, n_cubics):
        coef = np.zeros(n_cubics)
        coef[j] = 1.0
        out[:, j - 1] = BSpline(t, coef, _DEGREE, extrapolate=False).derivative(deriv_order)(pts)
    # constant column differentiates to zero
    return out


def diff_matrix(fine_grid: np.ndarray, order: int) -> DiffMatrix:
    """Dense J x J differentiation matrix for a uniform grid.

    Order 1 uses centred (-1/2h, 0, 1/2h) stencils inside and 3-point
    one-sided second-order stencils on the two boundary rows. Order 2 uses
    (1, -2, 1)/h^2 inside and 4-point one-sided second-order stencils on the
    boundary rows; both one-sided choices are exact on quadratics.
    """
    t = np.asarray(fine_grid, dtype=float)
    J = t.size
    if J < 5:
        raise ValueError("grid too small for the boundary stencils")
    steps = np.diff(t)
    h = steps[0]
    if not np.allclose(steps, h, rtol=1e-8, atol=0.0):
        raise ValueError("differentiation matrix requires a uniform grid")
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")

    D = np.zeros((J, J))
    if order == 1:
        for j in range(1, J - 1):
            D[j, j - 1] = -0.5 / h
            D[j, j + 1] = 0.5 / h
        D[0, :3] = np.array([-1.5, 2.0, -0.5]) / h
        D[-1, -3:] = np.array([0.5, -2.0, 1.5]) / h
    else:
        h2 = h * h
        for j in range(1, J - 1):
            D[j, j - 1] = 1.0 / h2
            D[j, j] = -2.0 / h2
            D[j, j + 1] = 1.0 / h2
        D[0, :4] = np.array([2.0, -5.0, 4.0, -1.0]) / h2
        D[-1, -4:] = np.array([-1.0, 4.0, -5.0, 2.0]) / h2
    return DiffMatrix(order=order, matrix=D, grid_spacing=float(h))


def solve_least_squares(A: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Minimum-norm least-squares solution of A x = b.

    Uses an SVD-based rank-revealing factorization (LAPACK gelsd), which
    returns the Moore-Penrose solution without assembling a pseudoinverse.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    x, _, _, _ = _lstsq(A, b, lapack_driver="gelsd")
    return x
