"""Command-line front end: dataset generation, fitting, likelihood surfaces.

Every run is specified by a flat configuration: built-in defaults, overlaid by
an optional JSON config file, overlaid by same-named command-line flags.
Outputs are plain CSV/JSON with all floats at 17 significant digits, and are
byte-identical for identical configuration and seed. Exit codes: 0 success,
1 usage or configuration error, 2 fit did not converge (files still written).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from ._fmt import dumps17, fmt17
from .datagen import (Dataset, generate_dataset, read_dataset, write_dataset)
from .likelihood import LoglikConfig, chi2_threshold, loglik_grid_2d, loglik_slice
from .models import get_model
from .optimizer import OptimizerOptions
from .profiler import (FitOptions, FitResult, ProfilerState, build_spline_system,
                       fit as run_fit)

MODEL_DEFAULTS = {
    "oscillator": {
        "theta_true": [1.0, 0.2, 1.0],
        "theta0": [2.0, 0.5, 2.0],
        "ic": [0.0, 0.0],
        "t_span": [0.0, 50.0],
    },
    "lotka-volterra": {
        "theta_true": [1.0, 1.0],
        "theta0": [2.0, 2.0],
        "ic": [1.0, 0.5],
        "t_span": [0.0, 15.0],
    },
}

GLOBAL_DEFAULTS = {
    "model": None,
    "n_points": 41,
    "sigma": 0.05,
    "seed": 0,
    "out_dir": ".",
    "n_basis": None,
    "fine_grid_size": None,
    "n_max": 20,
    "tol_y": 1e-3,
    "tol_theta": 1e-3,
    "w1": 1e-2,
    "weight_rule": "std-ratio",
    "sigma2": None,
    "data": None,
    "fit": None,
    "q": 0.95,
    "points": "51",
    "lo": None,
    "hi": None,
}


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors by default; this CLI reserves 2 for
    non-convergence, so usage problems exit 1 instead."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _float_list(text):
    try:
        return [float(v) for v in str(text).split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _build_parser() -> _Parser:
    p = _Parser(prog="gradmatch", allow_abbrev=False,
                description="ODE parameter inference by penalized spline gradient matching")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="JSON file with flat config keys")
        sp.add_argument("--out-dir", dest="out_dir", help="output directory (default .)")

    g = sub.add_parser("generate", help="write a synthetic dataset", allow_abbrev=False)
    common(g)
    g.add_argument("--model", choices=sorted(MODEL_DEFAULTS))
    g.add_argument("--theta-true", dest="theta_true", type=_float_list)
    g.add_argument("--ic", type=_float_list)
    g.add_argument("--n-points", dest="n_points", type=int)
    g.add_argument("--t-span", dest="t_span", type=_float_list)
    g.add_argument("--sigma", type=float)
    g.add_argument("--seed", type=int)

    f = sub.add_parser("fit", help="run the profiling iteration on a dataset",
                       allow_abbrev=False)
    common(f)
    f.add_argument("--data", help="dataset CSV (default <out-dir>/data.csv)")
    f.add_argument("--model", choices=sorted(MODEL_DEFAULTS))
    f.add_argument("--theta0", type=_float_list)
    f.add_argument("--n-basis", dest="n_basis", type=int)
    f.add_argument("--fine-grid-size", dest="fine_grid_size", type=int)
    f.add_argument("--n-max", dest="n_max", type=int)
    f.add_argument("--tol-y", dest="tol_y", type=float)
    f.add_argument("--tol-theta", dest="tol_theta", type=float)
    f.add_argument("--w1", type=float)
    f.add_argument("--weight-rule", dest="weight_rule", choices=["std-ratio", "var-ratio"])
    f.add_argument("--sigma2", type=float)

    l = sub.add_parser("loglik", help="normalised log-likelihood slices and grids",
                       allow_abbrev=False)
    common(l)
    l.add_argument("--data", help="dataset CSV (default <out-dir>/data.csv)")
    l.add_argument("--fit", help="fit result JSON (default <out-dir>/fit.json)")
    kind = l.add_mutually_exclusive_group()
    kind.add_argument("--slice", help="parameter name for a 1-D slice")
    kind.add_argument("--grid", nargs=2, metavar=("P1", "P2"),
                      help="two parameter names for a 2-D grid")
    l.add_argument("--lo", help="grid lower bound(s), comma-separated for --grid")
    l.add_argument("--hi", help="grid upper bound(s), comma-separated for --grid")
    l.add_argument("--points", help="grid point count(s), comma-separated for --grid")
    l.add_argument("--q", type=float, help="confidence quantile (default 0.95)")
    return p


def _load_config(args) -> dict:
    cfg = dict(GLOBAL_DEFAULTS)
    if args.config:
        path = Path(args.config)
        if not path.exists():
            raise ValueError(f"config file not found: {path}")
        try:
            loaded = json.loads(path.read_text())
        except json.JSONDecodeError as e:
            raise ValueError(f"config file is not valid JSON: {e}") from None
        if not isinstance(loaded, dict):
            raise ValueError("config file must hold a JSON object with flat keys")
        known = set(GLOBAL_DEFAULTS) | {"theta_true", "theta0", "ic", "t_span",
                                        "slice", "grid", "config"}
        for key in loaded:
            if key not in known:
                raise ValueError(f"unknown config key {key!r}")
        cfg.update(loaded)
    for key, val in vars(args).items():
        if key in ("command", "config"):
            continue
        if val is not None:
            cfg[key] = val
    return cfg


def _model_default(cfg, key):
    if cfg.get(key) is not None:
        return cfg[key]
    return MODEL_DEFAULTS[cfg["model"]][key]


def cmd_generate(cfg) -> int:
    model = get_model(cfg.get("model") or "oscillator")
    cfg = dict(cfg, model=model.name)
    dataset = generate_dataset(
        model.name,
        _model_default(cfg, "theta_true"),
        _model_default(cfg, "ic"),
        int(cfg["n_points"]),
        _model_default(cfg, "t_span"),
        float(cfg["sigma"]),
        int(cfg["seed"]),
    )
    out = Path(cfg["out_dir"])
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / "data.csv"
    write_dataset(dataset, csv_path)
    print(f"wrote {csv_path}")
    print(f"wrote {csv_path.with_name('data.meta.json')}")
    return 0


def _resolve_data(cfg) -> Dataset:
    path = Path(cfg["data"]) if cfg.get("data") else Path(cfg["out_dir"]) / "data.csv"
    if not path.exists():
        raise ValueError(f"dataset file not found: {path}")
    return read_dataset(path)


def _write_trace_csv(result: FitResult, names, path: Path) -> None:
    header = ["n", "w"] + list(names) + ["sigma_D", "sigma_M", "delta_y", "flag"]
    lines = [",".join(header)]
    for row in result.trace:
        cells = [str(row.n), fmt17(row.w)]
        cells += [fmt17(v) for v in row.theta_hat]
        cells += [fmt17(row.sigma_D), fmt17(row.sigma_M), fmt17(row.delta_y), row.flag]
        lines.append(",".join(cells))
    path.write_text("\n".join(lines) + "\n")


def _write_curve_csv(tgrid, values, path: Path) -> None:
    K = values.shape[1]
    lines = ["t," + ",".join(f"y{k + 1}" for k in range(K))]
    for i, t in enumerate(tgrid):
        lines.append(",".join([fmt17(t)] + [fmt17(v) for v in values[i]]))
    path.write_text("\n".join(lines) + "\n")


def cmd_fit(cfg) -> int:
    dataset = _resolve_data(cfg)
    model_name = cfg.get("model") or dataset.provenance.get("model")
    if not model_name:
        raise ValueError("model not given and dataset metadata does not name one")
    model = get_model(model_name)
    theta0 = cfg.get("theta0") or MODEL_DEFAULTS[model.name]["theta0"]

    sigma2 = cfg.get("sigma2")
    if sigma2 is None:
        sigma2 = dataset.noise_sigma ** 2 if dataset.noise_sigma > 0 else 0.05 ** 2

    opts = FitOptions(
        n_basis=cfg["n_basis"], fine_grid_size=cfg["fine_grid_size"],
        n_max=int(cfg["n_max"]), tol_y=float(cfg["tol_y"]),
        tol_theta=float(cfg["tol_theta"]), w1=float(cfg["w1"]),
        weight_rule=cfg["weight_rule"],
    )
    result = run_fit(dataset, model, theta0, opts)

    out = Path(cfg["out_dir"])
    out.mkdir(parents=True, exist_ok=True)
    system = build_spline_system(dataset.times, opts.n_basis, opts.fine_grid_size)

    ics = result.initial_conditions
    doc = {
        "model": model.name,
        "param_names": list(model.param_names),
        "theta0": [float(v) for v in theta0],
        "theta_hat": [float(v) for v in result.theta_hat],
        "converged": result.converged,
        "reason": result.reason,
        "initial_conditions": {
            "values": list(ics.values),
            "derivatives": list(ics.derivatives) if ics.derivatives else None,
        },
        "final": {
            "n": result.final_state.n,
            "w": result.final_state.w,
            "sigma_D": result.final_state.sigma_D,
            "sigma_M": result.final_state.sigma_M,
        },
        "options": {
            "n_basis": system.basis.n_basis,
            "fine_grid_size": int(system.basis.fine_grid.size),
            "n_max": opts.n_max, "tol_y": opts.tol_y, "tol_theta": opts.tol_theta,
            "w1": opts.w1, "weight_rule": opts.weight_rule, "sigma2": float(sigma2),
        },
        "beta": [[float(v) for v in row] for row in result.final_state.beta],
        "trace": [
            {"n": r.n, "w": r.w, "theta_hat": list(r.theta_hat), "sigma_D": r.sigma_D,
             "sigma_M": r.sigma_M, "delta_y": r.delta_y, "flag": r.flag}
            for r in result.trace
        ],
    }
    (out / "fit.json").write_text(dumps17(doc))
    _write_curve_csv(system.basis.fine_grid, result.final_state.spline_values,
                     out / "spline.csv")
    _write_trace_csv(result, model.param_names, out / "trace.csv")
    for name in ("fit.json", "spline.csv", "trace.csv"):
        print(f"wrote {out / name}")
    if not result.converged:
        print(f"fit did not converge: {result.reason}", file=sys.stderr)
        return 2
    return 0


def _rebuild_state(doc, dataset, model):
    opts = doc["options"]
    system = build_spline_system(dataset.times, opts["n_basis"], opts["fine_grid_size"])
    beta = np.asarray(doc["beta"], dtype=float)
    theta_hat = np.asarray(doc["theta_hat"], dtype=float)
    yf = system.basis.B @ beta
    d1y = system.d1.matrix @ yf
    d2y = system.d2.matrix @ yf if 2 in model.diff_order else None
    state = ProfilerState(
        n=int(doc["final"]["n"]), w=float(doc["final"]["w"]), beta=beta,
        theta_hat=theta_hat, sigma_D=float(doc["final"]["sigma_D"]),
        sigma_M=float(doc["final"]["sigma_M"]), spline_values=yf,
        spline_derivs=d1y, spline_second_derivs=d2y)
    return system, state


def _axis_spec(cfg, key, idx, n_axes, fallback):
    raw = cfg.get(key)
    if raw is None:
        return fallback
    vals = _float_list(raw) if not isinstance(raw, (list, tuple)) else [float(v) for v in raw]
    if len(vals) == 1:
        return vals[0]
    if len(vals) != n_axes:
        raise ValueError(f"--{key} expects 1 or {n_axes} comma-separated values")
    return vals[idx]


def _grid_for(model, theta_hat, pname, cfg, idx, n_axes):
    if pname not in model.param_names:
        raise ValueError(f"unknown parameter {pname!r} for model {model.name}; "
                         f"choose from {list(model.param_names)}")
    p = model.param_names.index(pname)
    blo, bhi = model.param_bounds[p]
    center = theta_hat[p]
    lo = _axis_spec(cfg, "lo", idx, n_axes, max(blo, 0.5 * center))
    hi = _axis_spec(cfg, "hi", idx, n_axes, min(bhi, 1.5 * center))
    pts = int(_axis_spec(cfg, "points", idx, n_axes, 51))
    if pts < 3:
        raise ValueError("grids need at least 3 points")
    if not (lo < hi):
        raise ValueError(f"empty grid range for {pname!r}")
    return p, np.linspace(float(lo), float(hi), pts)


def cmd_loglik(cfg) -> int:
    dataset = _resolve_data(cfg)
    fit_path = Path(cfg["fit"]) if cfg.get("fit") else Path(cfg["out_dir"]) / "fit.json"
    if not fit_path.exists():
        raise ValueError(f"fit file not found: {fit_path}")
    doc = json.loads(fit_path.read_text())
    model = get_model(doc["model"])
    system, state = _rebuild_state(doc, dataset, model)
    config = LoglikConfig(noise_variance=float(doc["options"]["sigma2"]),
                          weight=float(doc["final"]["w"]))
    theta_hat = np.asarray(doc["theta_hat"], dtype=float)

    out = Path(cfg["out_dir"])
    out.mkdir(parents=True, exist_ok=True)
    q = float(cfg["q"])

    if cfg.get("slice"):
        pname = cfg["slice"]
        p, grid = _grid_for(model, theta_hat, pname, cfg, 0, 1)
        surface = loglik_slice(dataset, state, system, model, config, p, grid, theta_hat)
        path = out / f"slice_{pname}.csv"
        lines = ["param_value,norm_loglik"]
        for g, v in zip(surface.axes[0], surface.values):
            lines.append(f"{fmt17(g)},{fmt17(v)}")
        path.write_text("\n".join(lines) + "\n")
        dof = 1
        written = [path]
    elif cfg.get("grid"):
        names = cfg["grid"]
        if isinstance(names, str):
            names = [s.strip() for s in names.split(",")]
        if len(names) != 2:
            raise ValueError("--grid expects exactly two parameter names")
        p1, grid1 = _grid_for(model, theta_hat, names[0], cfg, 0, 2)
        p2, grid2 = _grid_for(model, theta_hat, names[1], cfg, 1, 2)
        if (p1, p2) != (0, 1):
            raise ValueError("2-D grids iterate the model's two parameters in declared order")
        surface = loglik_grid_2d(dataset, state, system, model, config,
                                 grid1, grid2, theta_hat)
        path = out / f"grid_{names[0]}_{names[1]}.csv"
        lines = [f"{names[0]},{names[1]},norm_loglik"]
        for i, g1 in enumerate(surface.axes[0]):
            for j, g2 in enumerate(surface.axes[1]):
                lines.append(f"{fmt17(g1)},{fmt17(g2)},{fmt17(surface.values[i, j])}")
        path.write_text("\n".join(lines) + "\n")
        dof = 2
        written = [path]
    else:
        raise ValueError("loglik needs --slice NAME or --grid P1 P2")

    tpath = out / "threshold.json"
    tpath.write_text(dumps17({"dof": dof, "quantile": q,
                              "threshold": chi2_threshold(dof, q)}))
    written.append(tpath)
    for w in written:
        print(f"wrote {w}")
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _load_config(args)
        if args.command == "generate":
            return cmd_generate(cfg)
        if args.command == "fit":
            return cmd_fit(cfg)
        return cmd_loglik(cfg)
    except (ValueError, OSError, KeyError) as e:
        print(f"gradmatch: error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
