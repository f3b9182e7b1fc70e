"""Command-line entry point.

    spde <command> --config <path> [--seed S] [--out DIR]

Commands: simulate, average, sweep, mixing, audit, probe.  Every command
writes its CSV artifacts plus a ``manifest.json`` into the output directory
(--out flag, else $SPDE_OUT, else the configured directory).  Exit codes:
0 success, 1 usage or configuration error, 2 numerical failure (the
failure is also recorded in the manifest).
"""

from __future__ import annotations

import argparse
import copy
import os
import sys

import numpy as np

from . import __version__
from .averaging import (
    EstimatedDrift,
    EstimationError,
    LinearFastMeanDrift,
    YIndependentDrift,
    contraction_test,
    estimate_averaged_drift,
    estimate_mixing_rate,
)
from .basis import zero_field
from .coefficients import audit_assumptions
from .config import ConfigError, RunConfig, config_fingerprint, parse_config
from .harness import SweepError, moment_audit, regularity_probe, run_epsilon_sweep
from .integrator import DivergenceError, make_noise_pair, simulate_coupled
from .reporting import write_csv, write_manifest
from .svgplot import line_plot

__all__ = ["main", "dispatch"]

COMMANDS = ("simulate", "average", "sweep", "mixing", "audit", "probe")


def _drift_provider(cfg: RunConfig, model, solver):
    choice = cfg.get("sweep", "drift")
    if choice == "identity":
        return YIndependentDrift(model)
    if choice == "oracle":
        return LinearFastMeanDrift(model, solver)
    a = cfg["averaging"]
    return EstimatedDrift(
        model, solver, a["t_burn"], a["t_avg"], a["n_traj"], seed=cfg.get("run", "seed"),
        quantum=a["cache_quantum"], reuse_tol=a["cache_reuse_tol"], max_estimates=a["max_estimates"],
    )


def _cmd_simulate(cfg: RunConfig, outdir: str):
    model = cfg.build_model()
    solver = cfg.build_solver()
    x0, y0 = cfg.initial_fields(model)
    noise = make_noise_pair(model, solver, cfg.get("run", "seed"), 0)
    traj = simulate_coupled(model, solver, x0, y0, noise)
    rows = []
    if cfg.get("output", "trajectory_view") == "spectral":
        header = ["t", "mode", "x_coeff", "y_coeff"]
        for state in traj:
            for k in range(model.basis.n_modes):
                rows.append((state.t, k + 1, float(state.x.coeffs[k]), float(state.y.coeffs[k])))
    else:
        header = ["t", "node", "x_value", "y_value"]
        for state in traj:
            for j, xi in enumerate(model.basis.nodes):
                rows.append((state.t, float(xi), float(state.x.values[j]), float(state.y.values[j])))
    path = os.path.join(outdir, "trajectory.csv")
    write_csv(path, header, rows)
    ts = [s.t for s in traj]
    line_plot(
        os.path.join(outdir, "trajectory.svg"),
        [(ts, [s.x.sup_norm() for s in traj], "slow"), (ts, [s.y.sup_norm() for s in traj], "fast")],
        title="sup-norm along the trajectory", xlabel="t", ylabel="sup-norm",
    )
    hit = traj[-1].hit
    return [path, os.path.join(outdir, "trajectory.svg")], {"hit": bool(hit), "states": len(traj)}


def _cmd_average(cfg: RunConfig, outdir: str):
    model = cfg.build_model()
    solver = cfg.build_solver()
    x0, _ = cfg.initial_fields(model)
    a = cfg["averaging"]
    est = estimate_averaged_drift(
        model, solver, x0, a["t_burn"], a["t_avg"], a["n_traj"], seed=cfg.get("run", "seed")
    )
    path = os.path.join(outdir, "drift.csv")
    write_csv(path, ["node", "value", "stderr"], est.rows())
    nodes = model.basis.nodes
    line_plot(
        os.path.join(outdir, "drift.svg"),
        [(nodes, est.nodal_values, "averaged drift"), (nodes, est.nodal_values + 2 * est.node_stderr, "+2se"),
         (nodes, est.nodal_values - 2 * est.node_stderr, "-2se")],
        title="averaged drift estimate", xlabel="xi", ylabel="value",
    )
    extra = {
        "n_traj": est.n_traj, "excluded": est.excluded,
        "growth_ratio": est.growth_ratio, "t_burn": est.t_burn, "t_avg": est.t_avg,
    }
    return [path, os.path.join(outdir, "drift.svg")], extra


def _cmd_sweep(cfg: RunConfig, outdir: str):
    model = cfg.build_model()
    solver = cfg.build_solver()
    plan = cfg.build_plan()
    x0, y0 = cfg.initial_fields(model)
    bbar = _drift_provider(cfg, model, solver)
    report = run_epsilon_sweep(model, plan, solver, bbar, x0=x0, y0=y0)
    sweep_path = os.path.join(outdir, "sweep.csv")
    write_csv(
        sweep_path,
        ["epsilon", "p", "estimate", "stderr", "M", "excluded"],
        [(r.eps, r.p, r.estimate, r.stderr, r.n_paths, r.excluded) for r in report.rows],
    )
    moment_rows = []
    for p in plan.p_list:
        moment_rows.extend(moment_audit(model, plan, solver, p, x0=x0, y0=y0))
    moments_path = os.path.join(outdir, "moments.csv")
    write_csv(
        moments_path,
        ["epsilon", "p", "slow_moment", "fast_moment", "flag"],
        [(r.eps, r.p, r.slow_moment, r.fast_moment, r.flagged) for r in moment_rows],
    )
    series = []
    for p in plan.p_list:
        rows = report.estimates(p)
        series.append(([r.eps for r in rows], [max(r.estimate, 1e-300) for r in rows], f"p={p:g}"))
    svg_path = os.path.join(outdir, "sweep.svg")
    line_plot(svg_path, series, title="strong error vs eps", xlabel="eps", ylabel="error", logx=True, logy=True)
    fits = {repr(p): {"slope": s, "intercept": b, "r2": r2} for p, (s, b, r2) in report.fits.items()}
    extra = {"fits": fits, "coupling_verified": report.coupling_verified, "drift": getattr(bbar, "description", "custom")}
    return [sweep_path, moments_path, svg_path], extra


def _cmd_mixing(cfg: RunConfig, outdir: str):
    model = cfg.build_model()
    solver = cfg.build_solver()
    x0, y0 = cfg.initial_fields(model)
    m = cfg["mixing"]
    seed = cfg.get("run", "seed")
    con = contraction_test(model, solver, x0, y0, zero_field(model.basis), m["horizon"], replicas=m["replicas"], seed=seed)
    mix = estimate_mixing_rate(
        model, solver, x0, m["observable"], m["lags"], m["replicas"], y0,
        seed=seed, longrun_horizon=m["longrun_horizon"],
    )
    c_path = os.path.join(outdir, "contraction.csv")
    write_csv(c_path, ["t", "gap", "stderr"], zip(con.times, con.gap, con.gap_stderr))
    m_path = os.path.join(outdir, "mixing.csv")
    write_csv(m_path, ["lag", "envelope", "stderr"], zip(mix.lags, mix.envelope, mix.stderr))
    svg_path = os.path.join(outdir, "mixing.svg")
    line_plot(
        svg_path,
        [(con.times, np.maximum(con.gap, 1e-300), "coupling gap"), (mix.lags, np.maximum(mix.envelope, 1e-300), "mixing envelope")],
        title="fast-equation ergodicity diagnostics", xlabel="t", ylabel="decay", logy=True,
    )
    extra = {
        "contraction_rate": con.rate, "contraction_r2": con.r_squared, "contraction_degenerate": con.degenerate,
        "mixing_rate": mix.rate, "mixing_r2": mix.r_squared, "mixing_degenerate": mix.degenerate,
        "observable": mix.observable, "long_run_average": mix.long_run_average,
    }
    return [c_path, m_path, svg_path], extra


def _cmd_audit(cfg: RunConfig, outdir: str):
    model = cfg.build_model()
    report = audit_assumptions(model, sample_budget=2000, seed=cfg.get("run", "seed"))
    path = os.path.join(outdir, "audit.csv")
    write_csv(
        path,
        ["check", "passed", "margin", "fitted_constant", "detail"],
        [(e.name, e.passed, e.margin, e.fitted_constant, e.detail) for e in report.entries],
    )
    return [path], {"all_passed": report.all_passed, "failed": [e.name for e in report.failed()]}


def _cmd_probe(cfg: RunConfig, outdir: str):
    model = cfg.build_model()
    solver = cfg.build_solver()
    x0, y0 = cfg.initial_fields(model)
    pr = cfg["probe"]
    report = regularity_probe(
        model, solver, pr["offsets"], pr["p"], pr["paths"], t0=pr["t0"],
        seed=cfg.get("run", "seed"), x0=x0, y0=y0,
    )
    path = os.path.join(outdir, "probe.csv")
    write_csv(path, ["h", "p", "estimate", "stderr"], report.rows)
    svg_path = os.path.join(outdir, "probe.svg")
    hs = [r[0] for r in report.rows if r[0] > 0 and r[2] > 0]
    es = [r[2] for r in report.rows if r[0] > 0 and r[2] > 0]
    line_plot(svg_path, [(hs, es, "increment moment")], title="time regularity probe",
              xlabel="h", ylabel="E |increment|^p", logx=True, logy=True)
    return [path, svg_path], {"exponent": report.exponent, "r2": report.r_squared}


_HANDLERS = {
    "simulate": _cmd_simulate,
    "average": _cmd_average,
    "sweep": _cmd_sweep,
    "mixing": _cmd_mixing,
    "audit": _cmd_audit,
    "probe": _cmd_probe,
}


def dispatch(command: str, cfg: RunConfig, outdir: str) -> int:
    """Run one command against a parsed config; artifacts land in ``outdir``."""
    if command not in _HANDLERS:
        print(f"error: unknown command {command!r}; choose from {', '.join(COMMANDS)}", file=sys.stderr)
        return 1
    os.makedirs(outdir, exist_ok=True)
    manifest_path = os.path.join(outdir, "manifest.json")
    common = dict(
        command=command,
        seed=cfg.get("run", "seed"),
        model_label=cfg.get("model", "label"),
        config_hash=config_fingerprint(cfg),
        version=__version__,
    )
    try:
        outputs, extra = _HANDLERS[command](cfg, outdir)
    except (DivergenceError, EstimationError, SweepError) as exc:
        write_manifest(manifest_path, outputs=[], status="numerical-failure", extra={"error": str(exc)}, **common)
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    write_manifest(manifest_path, outputs=outputs, status="ok", extra=extra, **common)
    return 0


def _with_seed(cfg: RunConfig, seed: int) -> RunConfig:
    values = copy.deepcopy(cfg.values)
    values["run"]["seed"] = seed
    return RunConfig(values)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="spde", description="slow-fast stochastic reaction-diffusion experiments")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, help="path to the experiment config file")
    parser.add_argument("--seed", type=int, default=None, help="override the master seed")
    parser.add_argument("--out", default=None, help="output directory (overrides $SPDE_OUT and the config)")
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code not in (0, None) else 0
    try:
        with open(args.config) as fh:
            text = fh.read()
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return 1
    try:
        cfg = parse_config(text)
    except ConfigError as exc:
        for line, msg in exc.errors:
            where = f"line {line}: " if line else ""
            print(f"config error: {where}{msg}", file=sys.stderr)
        return 1
    if args.seed is not None:
        cfg = _with_seed(cfg, args.seed)
    outdir = args.out or os.environ.get("SPDE_OUT") or cfg.get("output", "dir")
    return dispatch(args.command, cfg, outdir)


if __name__ == "__main__":
    sys.exit(main())
