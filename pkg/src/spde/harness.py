"""Coupled Monte-Carlo estimation of the strong averaging error across eps.

For each (eps, path) cell the full simulation and the averaged simulation
consume the *same* slow noise record (asserted by fingerprint), so the
sup-over-time gap is a genuine pathwise strong error.  The same slow paths
are reused across the whole eps sweep (common random numbers), which both
cuts the averaged-side work and makes the monotonicity of the error in eps
easy to see through Monte-Carlo noise.

Paths that hit the truncation radius keep running under the cut-off
dynamics and are counted, never discarded; only genuinely diverged paths
are excluded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .averaging import simulate_averaged
from .basis import SpectralField
from .coefficients import ModelSpec
from .integrator import (
    CoupledNoise,
    DivergenceError,
    SolverConfig,
    make_noise_pair,
    simulate_coupled,
    simulate_khasminskii,
)

__all__ = [
    "SweepPlan",
    "SweepRow",
    "ErrorReport",
    "SweepError",
    "khasminskii_window",
    "micro_step_for",
    "run_epsilon_sweep",
    "fit_convergence_rate",
    "regularity_probe",
    "ProbeReport",
    "moment_audit",
    "MomentRow",
    "khasminskii_trend",
]


class SweepError(RuntimeError):
    """Too many excluded paths to report a trustworthy estimate."""


@dataclass(frozen=True)
class SweepPlan:
    """The eps sweep: which scales, how many coupled paths, which moments."""

    eps_list: tuple[float, ...]
    n_paths: int
    p_list: tuple[float, ...] = (2.0,)
    kappa: float = 0.25  # window-selection exponent: delta_eps = kappa eps ln(1/eps)
    seed: int = 0
    micro_step_scale: float | None = None  # h(eps) = scale * eps, snapped into the macro grid

    def __post_init__(self):
        eps = self.eps_list
        if len(eps) < 1 or any(not 0.0 < e <= 1.0 for e in eps):
            raise ValueError("eps values must lie in (0, 1]")
        if any(a <= b for a, b in zip(eps, eps[1:])):
            raise ValueError("eps list must be strictly decreasing")
        if self.n_paths < 2:
            raise ValueError("need at least two paths")
        if not 0.0 < self.kappa:
            raise ValueError("kappa must be positive")


def khasminskii_window(eps: float, dt: float, kappa: float = 0.25) -> float:
    """Window length kappa * eps * ln(1/eps), snapped to a positive multiple of dt."""
    raw = kappa * eps * math.log(1.0 / eps)
    return max(1, round(raw / dt)) * dt


def micro_step_for(eps: float, config: SolverConfig, scale: float | None) -> float:
    """Per-eps micro step: scale * eps capped at dt and snapped to divide dt."""
    if scale is None:
        return config.h
    h = min(scale * eps, config.dt)
    return config.dt / max(1, math.ceil(config.dt / h))


@dataclass
class SweepRow:
    eps: float
    p: float
    estimate: float
    stderr: float
    n_paths: int
    excluded: int


@dataclass
class ErrorReport:
    rows: list[SweepRow]
    fits: dict = field(default_factory=dict)  # p -> (slope, intercept, r2)
    coupling_verified: bool = True

    def estimates(self, p: float) -> list[SweepRow]:
        return [r for r in self.rows if r.p == p]


def _sup_gap(traj_a, traj_b) -> float:
    if len(traj_a) != len(traj_b):
        raise ValueError("trajectories saved on different grids")
    gap = 0.0
    for sa, sb in zip(traj_a, traj_b):
        g = (sa.x - sb.x).sup_norm()
        if g > gap:
            gap = g
    return gap


def run_epsilon_sweep(
    model: ModelSpec,
    plan: SweepPlan,
    config: SolverConfig,
    bbar,
    x0: SpectralField | None = None,
    y0: SpectralField | None = None,
) -> ErrorReport:
    """Estimate E sup_t ||X_eps - X_bar||^p for every eps in the plan.

    The averaged trajectories depend only on the slow noise, so they are
    computed once per path and shared across the sweep.  Fast noise is keyed
    by the position of eps in the plan, so cells are reproducible
    individually.
    """
    x0, y0 = _initial_or_default(model, x0, y0)
    averaged = []
    slow_prints = []
    for m in range(plan.n_paths):
        pair = make_noise_pair(model, config, plan.seed, m)
        averaged.append(simulate_averaged(model, bbar, config, x0, pair.slow))
        slow_prints.append(pair.slow.fingerprint())

    rows: list[SweepRow] = []
    coupling_ok = True
    for i, eps in enumerate(plan.eps_list):
        h_eps = micro_step_for(eps, config, plan.micro_step_scale)
        cfg = replace(config, eps=eps, h=h_eps)
        gaps = []
        excluded = 0
        for m in range(plan.n_paths):
            pair = make_noise_pair(model, cfg, plan.seed, m, fast_qualifier=i)
            if pair.slow.fingerprint() != slow_prints[m]:
                coupling_ok = False
                raise SweepError(f"slow-noise fingerprint mismatch in cell (eps={eps}, path={m})")
            try:
                traj = simulate_coupled(model, cfg, x0, y0, pair)
            except DivergenceError:
                excluded += 1
                continue
            gaps.append(_sup_gap(traj, averaged[m]))
        if excluded > 0.2 * plan.n_paths:
            raise SweepError(f"{excluded}/{plan.n_paths} paths diverged at eps={eps}")
        arr = np.array(gaps)
        for p in plan.p_list:
            powered = arr**p
            est = float(powered.mean())
            se = float(powered.std(ddof=1) / math.sqrt(len(powered))) if len(powered) > 1 else 0.0
            rows.append(SweepRow(eps, p, est, se, len(powered), excluded))

    report = ErrorReport(rows, coupling_verified=coupling_ok)
    for p in plan.p_list:
        try:
            report.fits[p] = fit_convergence_rate(report, p)
        except ValueError:
            pass
    return report


def _initial_or_default(
    model: ModelSpec, x0: SpectralField | None, y0: SpectralField | None
) -> tuple[SpectralField, SpectralField]:
    # smooth single-mode defaults for library callers; the CLI passes the
    # configured initial data explicitly
    basis = model.basis
    if x0 is None:
        cx = np.zeros(basis.n_modes)
        cx[0] = 0.5
        x0 = SpectralField(basis, cx)
    if y0 is None:
        cy = np.zeros(basis.n_modes)
        cy[0] = 0.25
        y0 = SpectralField(basis, cy)
    return x0, y0


def fit_convergence_rate(report: ErrorReport, p: float = 2.0) -> tuple[float, float, float]:
    """Least-squares fit of log(error) against log(eps); returns (slope, intercept, R^2)."""
    rows = [r for r in report.estimates(p) if r.estimate > 0.0]
    dropped = len(report.estimates(p)) - len(rows)
    if len(rows) < 2:
        raise ValueError(f"need at least two positive error points, have {len(rows)} ({dropped} dropped)")
    lx = np.log([r.eps for r in rows])
    ly = np.log([r.estimate for r in rows])
    slope, intercept = np.polyfit(lx, ly, 1)
    pred = slope * lx + intercept
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - float(np.sum((ly - pred) ** 2)) / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(intercept), r2


@dataclass
class ProbeReport:
    rows: list[tuple[float, float, float, float]]  # (h, p, estimate, stderr)
    exponent: float
    r_squared: float


def regularity_probe(
    model: ModelSpec,
    config: SolverConfig,
    h_list,
    p: float,
    n_paths: int,
    t0: float | None = None,
    seed: int = 0,
    x0: SpectralField | None = None,
    y0: SpectralField | None = None,
) -> ProbeReport:
    """Fit the time-Hoelder exponent of E ||X(t0 + h) - X(t0)||^p in h.

    Each offset must be a multiple of the macro step.  Zero offsets are
    reported with a zero increment and excluded from the fit.
    """
    if t0 is None:
        t0 = 0.5 * config.t_end
    offsets = sorted(float(h) for h in h_list)
    steps = []
    for h in offsets:
        k = round(h / config.dt)
        if abs(k * config.dt - h) > 1e-9:
            raise ValueError(f"offset {h} is not a multiple of the macro step")
        steps.append(k)
    k0 = round(t0 / config.dt)
    if k0 * config.dt + max(offsets) > config.t_end + 1e-12:
        raise ValueError("probe window leaves the simulation horizon")

    x0, y0 = _initial_or_default(model, x0, y0)
    cfg = replace(config, save_stride=1)
    samples = np.empty((n_paths, len(offsets)))
    for m in range(n_paths):
        pair = make_noise_pair(model, cfg, seed, m)
        traj = simulate_coupled(model, cfg, x0, y0, pair)
        base = traj[k0].x
        for j, k in enumerate(steps):
            samples[m, j] = (traj[k0 + k].x - base).sup_norm() ** p

    rows = []
    for j, h in enumerate(offsets):
        est = float(samples[:, j].mean())
        se = float(samples[:, j].std(ddof=1) / math.sqrt(n_paths)) if n_paths > 1 else 0.0
        rows.append((h, p, est, se))
    usable = [(h, e) for h, _, e, _ in rows if h > 0.0 and e > 0.0]
    if len(usable) < 2:
        return ProbeReport(rows, float("nan"), 0.0)
    lx = np.log([u[0] for u in usable])
    ly = np.log([u[1] for u in usable])
    slope, intercept = np.polyfit(lx, ly, 1)
    pred = slope * lx + intercept
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - float(np.sum((ly - pred) ** 2)) / ss_tot if ss_tot > 0 else 1.0
    return ProbeReport(rows, float(slope), r2)


@dataclass
class MomentRow:
    eps: float
    p: float
    slow_moment: float  # sup over the save grid of the Monte-Carlo mean of ||X||^p
    fast_moment: float  # time integral of the Monte-Carlo mean of ||Y||^p
    flagged: bool


def moment_audit(
    model: ModelSpec,
    plan: SweepPlan,
    config: SolverConfig,
    p: float,
    x0: SpectralField | None = None,
    y0: SpectralField | None = None,
) -> list[MomentRow]:
    """Empirical uniform-in-eps moment table with a 3x spread flag."""
    x0, y0 = _initial_or_default(model, x0, y0)
    rows = []
    for i, eps in enumerate(plan.eps_list):
        cfg = replace(config, eps=eps, h=micro_step_for(eps, config, plan.micro_step_scale))
        sup_means = None
        times = None
        y_means = None
        n_ok = 0
        for m in range(plan.n_paths):
            pair = make_noise_pair(model, cfg, plan.seed, m, fast_qualifier=i)
            try:
                traj = simulate_coupled(model, cfg, x0, y0, pair)
            except DivergenceError:
                continue
            xs = np.array([s.x.sup_norm() ** p for s in traj])
            ys = np.array([s.y.sup_norm() ** p for s in traj])
            if sup_means is None:
                sup_means = xs
                y_means = ys
                times = np.array([s.t for s in traj])
            else:
                sup_means += xs
                y_means += ys
            n_ok += 1
        if n_ok == 0:
            raise SweepError(f"all paths diverged at eps={eps}")
        slow = float(np.max(sup_means / n_ok))
        fast = float(np.trapezoid(y_means / n_ok, times))
        rows.append(MomentRow(eps, p, slow, fast, False))
    slows = [r.slow_moment for r in rows]
    flag = max(slows) > 3.0 * min(slows) if min(slows) > 0 else False
    return [replace_flag(r, flag) for r in rows]


def replace_flag(row: MomentRow, flag: bool) -> MomentRow:
    return MomentRow(row.eps, row.p, row.slow_moment, row.fast_moment, flag)


def khasminskii_trend(
    model: ModelSpec,
    config: SolverConfig,
    eps: float,
    delta_list,
    n_paths: int,
    seed: int = 0,
    x0: SpectralField | None = None,
    y0: SpectralField | None = None,
) -> list[tuple[float, float, float]]:
    """E sup_t ||Y_hat - Y||^2 for a decreasing list of window lengths.

    Paths share noise across window lengths (same keys), so the decreasing
    trend is tested with common random numbers.
    """
    x0, y0 = _initial_or_default(model, x0, y0)
    cfg = replace(config, eps=eps)
    out = []
    for delta in delta_list:
        sups = []
        for m in range(n_paths):
            pair = make_noise_pair(model, cfg, seed, m)
            res = simulate_khasminskii(model, cfg, x0, y0, delta, pair)
            gap = max((yh - y).sup_norm() for yh, y in zip(res.y_hats, res.ys))
            sups.append(gap**2)
        arr = np.array(sups)
        out.append((float(delta), float(arr.mean()), float(arr.std(ddof=1) / math.sqrt(n_paths))))
    return out
