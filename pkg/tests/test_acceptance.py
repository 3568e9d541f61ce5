"""End-to-end acceptance criteria for the profiling pipeline.

One test per criterion, each printing a single PASS/FAIL line with the
measured quantities. Criteria that the implementation cannot meet are still
asserted at their stated tolerances so the suite reports them as failures
rather than papering over them.
"""

import hashlib
import math
import subprocess
import sys
import time

import numpy as np
import pytest

from gradmatch.basis import diff_matrix, solve_least_squares
from gradmatch.datagen import generate_dataset, oscillator_analytic, rk4_integrate
from gradmatch.likelihood import LoglikConfig, chi2_threshold, loglik_grid_2d, loglik_slice
from gradmatch.models import LOTKA_VOLTERRA, OSCILLATOR
from gradmatch.profiler import build_spline_system, fit

OSC_TRUE = (1.0, 0.2, 1.0)
OSC_START = (2.0, 0.5, 2.0)
LV_TRUE = (1.0, 1.0)
LV_START = (2.0, 2.0)
N_SEEDS = 20


def report(num, ok, detail):
    print(f"criterion {num}: {'PASS' if ok else 'FAIL'} ({detail})")
    assert ok, f"criterion {num}: {detail}"


def batch(model_name, theta_true, theta0, ic, t_span, seeds, model):
    runs = []
    for seed in seeds:
        data = generate_dataset(model_name, theta_true, ic, 41, t_span, 0.05, seed)
        t0 = time.perf_counter()
        result = fit(data, model, theta0)
        runs.append((seed, data, result, time.perf_counter() - t0))
    return runs


@pytest.fixture(scope="module")
def osc_batch():
    return batch("oscillator", OSC_TRUE, OSC_START, (0.0, 0.0), (0.0, 50.0),
                 range(1001, 1001 + N_SEEDS), OSCILLATOR)


@pytest.fixture(scope="module")
def lv_batch():
    return batch("lotka-volterra", LV_TRUE, LV_START, (1.0, 0.5), (0.0, 15.0),
                 range(2001, 2001 + N_SEEDS), LOTKA_VOLTERRA)


def median_param_errors(runs, theta_true):
    errs = np.array([np.abs(np.asarray(r.theta_hat) - theta_true)
                     for _, _, r, _ in runs])
    return np.median(errs, axis=0)


def count_local_maxima_1d(v):
    n = 0
    for i in range(v.size):
        left = v[i - 1] if i > 0 else -np.inf
        right = v[i + 1] if i + 1 < v.size else -np.inf
        if v[i] > left and v[i] > right:
            n += 1
    return n


def count_local_maxima_2d(v):
    padded = np.full((v.shape[0] + 2, v.shape[1] + 2), -np.inf)
    padded[1:-1, 1:-1] = v
    n = 0
    for i in range(1, v.shape[0] + 1):
        for j in range(1, v.shape[1] + 1):
            c = padded[i, j]
            neigh = padded[i - 1:i + 2, j - 1:j + 2].copy()
            neigh[1, 1] = -np.inf
            if c > neigh.max():
                n += 1
    return n


def window(center, lo, hi, n=51):
    return np.linspace(max(lo, 0.5 * center), min(hi, 1.5 * center), n)


def test_criterion_01_oscillator_recovery(osc_batch):
    fast = sum(1 for _, _, r, _ in osc_batch
               if r.converged and r.final_state.n <= 10)
    med = median_param_errors(osc_batch, np.array(OSC_TRUE))
    slowest = max(t for _, _, _, t in osc_batch)
    ok = fast >= 18 and np.all(med <= 0.1) and slowest <= 10.0
    report(1, ok, f"converged<=10 iters in {fast}/20, median errors "
                  f"{np.round(med, 4).tolist()}, slowest fit {slowest:.2f}s")


def test_criterion_02_predator_prey_recovery(lv_batch):
    fast = sum(1 for _, _, r, _ in lv_batch
               if r.converged and r.final_state.n <= 10)
    med = median_param_errors(lv_batch, np.array(LV_TRUE))
    slowest = max(t for _, _, _, t in lv_batch)
    ok = fast >= 18 and np.all(med <= 0.15) and slowest <= 10.0
    report(2, ok, f"converged<=10 iters in {fast}/20, median errors "
                  f"{np.round(med, 4).tolist()}, slowest fit {slowest:.2f}s")


def test_criterion_03_noiseless_recovery():
    osc_data = generate_dataset("oscillator", OSC_TRUE, (0.0, 0.0), 41,
                                (0.0, 50.0), 0.0, 0)
    osc = fit(osc_data, OSCILLATOR, OSC_START)
    osc_err = np.max(np.abs(np.asarray(osc.theta_hat) - OSC_TRUE))
    osc_ic = osc.initial_conditions
    osc_ic_err = max(abs(osc_ic.values[0]), abs(osc_ic.derivatives[0]))

    lv_data = generate_dataset("lotka-volterra", LV_TRUE, (1.0, 0.5), 41,
                               (0.0, 15.0), 0.0, 0)
    lv = fit(lv_data, LOTKA_VOLTERRA, LV_START)
    lv_err = np.max(np.abs(np.asarray(lv.theta_hat) - LV_TRUE))
    lv_ic_err = max(abs(lv.initial_conditions.values[0] - 1.0),
                    abs(lv.initial_conditions.values[1] - 0.5))

    ok = osc_err <= 1e-2 and lv_err <= 1e-2 and osc_ic_err <= 1e-2 and lv_ic_err <= 1e-2
    report(3, ok, f"max errors: oscillator params {osc_err:.4f}, "
                  f"predator-prey params {lv_err:.2e}, "
                  f"oscillator ICs {osc_ic_err:.2e}, predator-prey ICs {lv_ic_err:.2e}")


def test_criterion_04_initial_condition_recovery(osc_batch):
    hits = 0
    worst = (0.0, 0.0)
    for _, _, r, _ in osc_batch:
        x0 = abs(r.initial_conditions.values[0])
        v0 = abs(r.initial_conditions.derivatives[0])
        worst = (max(worst[0], x0), max(worst[1], v0))
        if x0 <= 0.1 and v0 <= 0.35:
            hits += 1
    ok = hits >= 16
    report(4, ok, f"|x(0)|<=0.1 and |dx(0)|<=0.35 in {hits}/20 seeds, "
                  f"worst ({worst[0]:.3f}, {worst[1]:.3f})")


def test_criterion_05_interpolation_at_start(osc_batch, lv_batch):
    worst = max(r.trace[0].sigma_D for _, _, r, _ in osc_batch + lv_batch)
    ok = worst <= 1e-6
    report(5, ok, f"largest weight-0 data mismatch {worst:.2e}")


def test_criterion_06_surface_unimodality(osc_batch, lv_batch):
    _, osc_data, osc_res, _ = osc_batch[0]
    osc_system = build_spline_system(osc_data.times)
    cfg = LoglikConfig(noise_variance=0.05 ** 2, weight=osc_res.final_state.w)
    counts = []
    for p, (lo, hi) in enumerate(OSCILLATOR.param_bounds):
        grid = window(osc_res.theta_hat[p], lo, hi)
        surf = loglik_slice(osc_data, osc_res.final_state, osc_system,
                            OSCILLATOR, cfg, p, grid, osc_res.theta_hat)
        counts.append(count_local_maxima_1d(surf.values))

    _, lv_data, lv_res, _ = lv_batch[0]
    lv_system = build_spline_system(lv_data.times)
    lv_cfg = LoglikConfig(noise_variance=0.05 ** 2, weight=lv_res.final_state.w)
    g1 = window(lv_res.theta_hat[0], *LOTKA_VOLTERRA.param_bounds[0])
    g2 = window(lv_res.theta_hat[1], *LOTKA_VOLTERRA.param_bounds[1])
    surf2 = loglik_grid_2d(lv_data, lv_res.final_state, lv_system,
                           LOTKA_VOLTERRA, lv_cfg, g1, g2, lv_res.theta_hat)
    grid_count = count_local_maxima_2d(surf2.values)

    ok = counts == [1, 1, 1] and grid_count == 1
    report(6, ok, f"local maxima per oscillator slice {counts}, "
                  f"predator-prey grid {grid_count}")


def test_criterion_07_threshold_exactness():
    got = chi2_threshold(2, 0.95)
    ok = abs(got - (-2.99573)) <= 1e-3
    report(7, ok, f"chi2_threshold(2, 0.95) = {got:.6f}")


def test_criterion_08_weight_schedule(osc_batch, lv_batch):
    pinned = all(r.trace[1].w == 1e-2 for _, _, r, _ in osc_batch + lv_batch)
    osc_final = np.array([r.final_state.w for _, _, r, _ in osc_batch])
    lv_final = np.array([r.final_state.w for _, _, r, _ in lv_batch])
    osc_in_band = np.all((osc_final >= 0.05) & (osc_final <= 2.0))
    lv_in_band = np.all((lv_final >= 0.02) & (lv_final <= 1.0))
    ok = pinned and osc_in_band and lv_in_band
    report(8, ok, f"w(1)=1e-2 exact: {pinned}; oscillator final w in [0.05,2.0]: "
                  f"{osc_in_band} (range [{osc_final.min():.2e}, {osc_final.max():.2e}]); "
                  f"predator-prey final w in [0.02,1.0]: {lv_in_band} "
                  f"(range [{lv_final.min():.2e}, {lv_final.max():.2e}])")


def test_criterion_09_numerical_operator_suite():
    grid = np.linspace(0.0, 50.0, 206)
    D1 = diff_matrix(grid, 1).matrix
    D2 = diff_matrix(grid, 2).matrix
    d1_err = max(np.max(np.abs(D1 @ np.ones_like(grid))),
                 np.max(np.abs(D1 @ (3.0 * grid - 2.0) - 3.0)))
    d2_err = max(np.max(np.abs(D2 @ (grid ** 2) - 2.0)),
                 np.max(np.abs(D2 @ grid)))

    rng = np.random.default_rng(0)
    A = rng.standard_normal((60, 9))
    b = rng.standard_normal(60)
    ortho = np.max(np.abs(A.T @ (A @ solve_least_squares(A, b) - b)))

    t_obs = np.linspace(0.0, 50.0, 41)
    m, c, k = OSC_TRUE

    def seg(forcing):
        def rhs(t, y):
            return np.array([y[1], (forcing - c * y[1] - k * y[0]) / m])
        return rhs
    _, s1 = rk4_integrate(seg(1.0), (0.0, 0.0), (0.0, 25.0), 1e-3)
    _, s2 = rk4_integrate(seg(0.0), s1[-1], (25.0, 50.0), 1e-3)
    dense = np.concatenate([s1[:-1, 0], s2[:, 0]])
    idx = [int(round(t / 1e-3)) for t in t_obs]
    rk_err = np.max(np.abs(oscillator_analytic(t_obs, OSC_TRUE, (0.0, 0.0))
                           - dense[idx]))

    # normalized scales: derivatives on [0,50] keep entries O(1)
    ok = d1_err <= 1e-10 * 3.0 and d2_err <= 1e-10 and ortho <= 1e-8 and rk_err <= 1e-6
    report(9, ok, f"difference-matrix errors {d1_err:.2e}/{d2_err:.2e}, "
                  f"orthogonality {ortho:.2e}, analytic-vs-RK {rk_err:.2e}")


def test_criterion_10_determinism(tmp_path):
    def run(args, cwd):
        r = subprocess.run([sys.executable, "-m", "gradmatch.cli", *args],
                           cwd=cwd, capture_output=True, text=True)
        assert r.returncode == 0, r.stderr
    digests = []
    for sub in ("a", "b"):
        d = tmp_path / sub
        d.mkdir()
        run(["generate", "--model", "oscillator", "--seed", "11"], d)
        run(["fit"], d)
        digests.append(tuple(hashlib.sha256((d / f).read_bytes()).hexdigest()
                             for f in ("data.csv", "trace.csv", "fit.json")))
    ok = digests[0] == digests[1]
    report(10, ok, "repeated generate+fit byte-identical" if ok
           else f"digest mismatch {digests}")
