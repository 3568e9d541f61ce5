"""Bounded derivative-free local minimization (Nelder-Mead simplex)."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

# standard simplex coefficients: reflect, expand, contract, shrink
_ALPHA = 1.0
_GAMMA = 2.0
_RHO = 0.5
_SIGMA = 0.5


@dataclass(frozen=True)
class OptimizerOptions:
    max_evals: int = 4000
    x_tol: float = 1e-9
    f_tol: float = 1e-12
    initial_step: tuple[float, ...] | None = None
    bounds: tuple[tuple[float, float], ...] | None = None

    def __post_init__(self):
        if self.x_tol <= 0 or self.f_tol <= 0:
            raise ValueError("tolerances must be positive")


class MinimizeResult(NamedTuple):
    x: np.ndarray
    fun: float
    n_evals: int
    status: str


def _project(x, bounds):
    if bounds is None:
        return x
    lo, hi = bounds
    return np.minimum(np.maximum(x, lo), hi)


class _BudgetExhausted(Exception):
    pass


def minimize(objective, x0, opts: OptimizerOptions | None = None) -> MinimizeResult:
    """Nelder-Mead with box projection of every trial point.

    The initial simplex is x0 plus one per-axis step (default
    max(0.1*|x0_i|, 0.1)), deterministic by construction. Terminates with
    status "converged" once the simplex diameter is below x_tol and the value
    spread below f_tol together (either alone can hold at a simplex that still
    straddles the minimum), or with "max_evals" when the evaluation budget is
    exhausted; n_evals never exceeds the budget.
    """
    opts = opts or OptimizerOptions()
    x0 = np.asarray(x0, dtype=float).copy()
    dim = x0.size
    if opts.max_evals < dim + 1:
        raise ValueError("max_evals must allow at least one simplex evaluation")

    bounds = None
    if opts.bounds is not None:
        lo = np.array([b[0] for b in opts.bounds], dtype=float)
        hi = np.array([b[1] for b in opts.bounds], dtype=float)
        if np.any(x0 < lo) or np.any(x0 > hi):
            raise ValueError("x0 outside bounds")
        bounds = (lo, hi)

    steps = np.asarray(opts.initial_step, dtype=float) if opts.initial_step is not None \
        else np.maximum(0.1 * np.abs(x0), 0.1)

    n_evals = 0

    def f(x):
        nonlocal n_evals
        if n_evals >= opts.max_evals:
            raise _BudgetExhausted
        n_evals += 1
        return float(objective(x))

    f0 = f(x0)
    if not np.isfinite(f0):
        raise ValueError("objective is not finite at x0")

    verts = [x0]
    for i in range(dim):
        v = x0.copy()
        v[i] += steps[i]
        v = _project(v, bounds)
        if v[i] == x0[i]:  # step clipped away entirely, try the other direction
            v = x0.copy()
            v[i] -= steps[i]
            v = _project(v, bounds)
        verts.append(v)
    vals = [f0] + [f(v) for v in verts[1:]]

    verts = np.asarray(verts)
    vals = np.asarray(vals)
    status = "max_evals"

    try:
        while True:
            order = np.argsort(vals, kind="stable")
            verts, vals = verts[order], vals[order]

            diam = np.max(np.abs(verts[1:] - verts[0])) if dim else 0.0
            if diam < opts.x_tol and vals[-1] - vals[0] < opts.f_tol:
                status = "converged"
                break

            centroid = verts[:-1].mean(axis=0)
            xr = _project(centroid + _ALPHA * (centroid - verts[-1]), bounds)
            fr = f(xr)

            if fr < vals[0]:
                xe = _project(centroid + _GAMMA * (xr - centroid), bounds)
                fe = f(xe)
                if fe < fr:
                    verts[-1], vals[-1] = xe, fe
                else:
                    verts[-1], vals[-1] = xr, fr
            elif fr < vals[-2]:
                verts[-1], vals[-1] = xr, fr
            else:
                if fr < vals[-1]:
                    xc = _project(centroid + _RHO * (xr - centroid), bounds)
                else:
                    xc = _project(centroid + _RHO * (verts[-1] - centroid), bounds)
                fc = f(xc)
                if fc < min(fr, vals[-1]):
                    verts[-1], vals[-1] = xc, fc
                else:
                    for i in range(1, dim + 1):
                        v = _project(verts[0] + _SIGMA * (verts[i] - verts[0]), bounds)
                        fv = f(v)  # evaluate before mutating so an exhausted
                        verts[i], vals[i] = v, fv  # budget leaves pairs intact
    except _BudgetExhausted:
        status = "max_evals"

    order = np.argsort(vals, kind="stable")
    verts, vals = verts[order], vals[order]
    return MinimizeResult(x=verts[0].copy(), fun=float(vals[0]),
                          n_evals=n_evals, status=status)
