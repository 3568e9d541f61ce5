"""Synthetic datasets: analytic oscillator trajectories, RK-integrated
Lotka-Volterra trajectories, and seedable IID Gaussian corruption."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._fmt import dumps17, fmt17
from .models import FORCING_SWITCH_TIME, get_model

RK4_DEFAULT_DT = 1e-3
RNG_FAMILY = "numpy-pcg64"


@dataclass(frozen=True)
class InitialConditions:
    """State at t = 0: per-component values, plus first derivatives for
    second-order components (None otherwise)."""

    values: tuple[float, ...]
    derivatives: tuple[float, ...] | None = None


@dataclass(frozen=True)
class Dataset:
    """Observed times and (possibly noisy) values with generation metadata."""

    times: np.ndarray
    values: np.ndarray
    noise_sigma: float
    seed: int | None
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)
        if not np.all(np.diff(t) > 0):
            raise ValueError("observation times must be strictly ascending")
        if not np.all(np.isfinite(v)):
            raise ValueError("observations must be finite")
        if v.shape[0] != t.size:
            raise ValueError("times and values disagree in length")

    @property
    def K(self) -> int:
        return self.values.shape[1]


def _oscillator_segment(tau, m, c, k, forcing, x0, v0):
    """Underdamped response on one constant-forcing segment, from (x0, v0) at tau=0."""
    gamma = c / (2.0 * m)
    w0sq = k / m
    wsq = w0sq - gamma * gamma
    if wsq <= 0:
        raise ValueError("parameters are not underdamped (oscillation frequency not real)")
    w = math.sqrt(wsq)
    xeq = forcing / k
    c1 = x0 - xeq
    c2 = (v0 + gamma * c1) / w
    e = np.exp(-gamma * tau)
    cos_ = np.cos(w * tau)
    sin_ = np.sin(w * tau)
    x = e * (c1 * cos_ + c2 * sin_) + xeq
    v = e * ((-gamma * c1 + w * c2) * cos_ + (-gamma * c2 - w * c1) * sin_)
    return x, v


def oscillator_analytic(t, theta, ic) -> np.ndarray:
    """Exact displacement of the step-released damped oscillator.

    The forcing is 1 up to t = 25 and 0 afterwards, so the closed-form
    underdamped solution is evaluated piecewise, with the second segment
    re-initialized from (x(25), dx/dt(25)) to keep x and dx/dt continuous.
    Parameter order (m, c, k); requires the underdamped regime and k != 0.
    """
    m, c, k = (float(v) for v in theta)
    if k == 0:
        raise ValueError("spring constant k must be nonzero")
    if m == 0:
        raise ValueError("mass m must be nonzero")
    if isinstance(ic, InitialConditions):
        x0 = ic.values[0]
        v0 = ic.derivatives[0] if ic.derivatives else 0.0
    else:
        x0, v0 = (float(v) for v in ic)
    t = np.asarray(t, dtype=float)
    scalar = t.ndim == 0
    t = np.atleast_1d(t)

    ts = FORCING_SWITCH_TIME
    x = np.empty_like(t)
    before = t < ts
    x[before], _ = _oscillator_segment(t[before], m, c, k, 1.0, x0, v0)
    if np.any(~before):
        x_s, v_s = _oscillator_segment(np.array([ts]), m, c, k, 1.0, x0, v0)
        x[~before], _ = _oscillator_segment(t[~before] - ts, m, c, k, 0.0, x_s[0], v_s[0])
    return x[0] if scalar else x


def rk4_integrate(rhs, ic, t_span, dt):
    """Classical fixed-step RK4 on a dense grid.

    ``rhs`` is a callable (t, y) -> dy/dt for a first-order system (wrap
    higher-order models as first-order states before calling). Returns
    (times, trajectory) with trajectory shape (n_steps + 1, len(ic)).
    Raises if the state stops being finite (blow-up) or dt does not divide
    the span within rounding.
    """
    t0, t1 = (float(v) for v in t_span)
    if dt <= 0:
        raise ValueError("dt must be positive")
    span = t1 - t0
    n = int(round(span / dt))
    if n < 1 or abs(n * dt - span) > 1e-9 * max(1.0, abs(span)):
        raise ValueError("dt must divide the time span within rounding")
    y = np.atleast_1d(np.asarray(ic, dtype=float)).copy()
    times = t0 + dt * np.arange(n + 1)
    traj = np.empty((n + 1, y.size))
    traj[0] = y
    for i in range(n):
        t = times[i]
        k1 = np.asarray(rhs(t, y))
        k2 = np.asarray(rhs(t + 0.5 * dt, y + 0.5 * dt * k1))
        k3 = np.asarray(rhs(t + 0.5 * dt, y + 0.5 * dt * k2))
        k4 = np.asarray(rhs(t + dt, y + dt * k3))
        y = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(y)):
            raise RuntimeError(f"integration blew up at t = {times[i + 1]:g}")
        traj[i + 1] = y
    return times, traj


def generate_dataset(model_name, theta_true, ic, n_points, t_span, sigma, seed) -> Dataset:
    """Sample the clean model solution on an equispaced grid and add noise.

    Oscillator data come from the closed-form solution; Lotka-Volterra data
    from RK4 with a step no coarser than 1e-3 chosen to land exactly on the
    sample times. Noise is IID N(0, sigma^2) per scalar observation from
    numpy's seeded PCG64 generator.
    """
    model = get_model(model_name)
    if n_points < 2:
        raise ValueError("need at least two sample points")
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    t0, t1 = (float(v) for v in t_span)
    times = np.linspace(t0, t1, int(n_points))
    theta = model.check_bounds(theta_true)
    ic_values = tuple(float(v) for v in (ic.values if isinstance(ic, InitialConditions) else ic))

    if model.name == "oscillator":
        clean = oscillator_analytic(times, theta, ic_values)[:, None]
    else:
        alpha, delta = theta

        def lv(t, y):
            a, b = y
            return np.array([alpha * a - a * b, delta * a * b - b])

        interval = (t1 - t0) / (n_points - 1)
        per = max(1, int(round(interval / RK4_DEFAULT_DT)))
        _, traj = rk4_integrate(lv, ic_values, (t0, t1), interval / per)
        clean = traj[::per]

    values = clean.copy()
    if sigma > 0:
        rng = np.random.default_rng(seed)
        values = clean + sigma * rng.standard_normal(clean.shape)

    provenance = {
        "model": model.name,
        "theta_true": [float(v) for v in theta],
        "ic": list(ic_values),
        "t_span": [t0, t1],
        "n_points": int(n_points),
        "sigma": float(sigma),
        "seed": seed,
        "rng": RNG_FAMILY,
    }
    return Dataset(times=times, values=values, noise_sigma=float(sigma),
                   seed=seed, provenance=provenance)


def meta_path_for(csv_path) -> Path:
    p = Path(csv_path)
    return p.with_name(p.stem + ".meta.json")


def write_dataset(dataset: Dataset, csv_path) -> None:
    """Write ``t,y1[,y2]`` CSV plus a sidecar ``<name>.meta.json``."""
    p = Path(csv_path)
    header = "t," + ",".join(f"y{k + 1}" for k in range(dataset.K))
    lines = [header]
    for i, t in enumerate(dataset.times):
        row = [fmt17(t)] + [fmt17(v) for v in dataset.values[i]]
        lines.append(",".join(row))
    p.write_text("\n".join(lines) + "\n")
    meta_path_for(p).write_text(dumps17(dataset.provenance))


def read_dataset(csv_path) -> Dataset:
    """Read a dataset CSV (and its sidecar metadata when present)."""
    p = Path(csv_path)
    lines = p.read_text().strip().splitlines()
    if not lines:
        raise ValueError(f"{p}: empty dataset file")
    header = [c.strip() for c in lines[0].split(",")]
    if header[0] != "t" or len(header) < 2 or \
            any(h != f"y{k + 1}" for k, h in enumerate(header[1:])):
        raise ValueError(f"{p}: expected header 't,y1[,y2,...]', got {lines[0]!r}")
    try:
        rows = [[float(c) for c in ln.split(",")] for ln in lines[1:]]
    except ValueError:
        raise ValueError(f"{p}: non-numeric entry in data rows") from None
    arr = np.asarray(rows, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != len(header):
        raise ValueError(f"{p}: ragged rows")

    meta = {}
    mp = meta_path_for(p)
    if mp.exists():
        meta = json.loads(mp.read_text())
    return Dataset(
        times=arr[:, 0],
        values=arr[:, 1:],
        noise_sigma=float(meta.get("sigma", 0.0)),
        seed=meta.get("seed"),
        provenance=meta,
    )
