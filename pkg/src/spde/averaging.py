"""Frozen fast dynamics, ergodicity diagnostics, and the averaged equation.

The fast equation with the slow state frozen at ``x`` is mixing: two copies
driven by the same noise contract, and time averages of observables settle
regardless of the initial state.  The averaged drift is therefore estimated
by a single combined time-and-ensemble average of the slow reaction along
frozen-fast trajectories after a burn-in; the exponential mixing is what
justifies collapsing the double (measure, time) average into one.  The
distribution family itself is never represented.

Drift providers all expose ``drift_values(x) -> nodal array`` so the
averaged solver can reuse the exact floating-point path of the coupled slow
step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .basis import SpectralField, field_from_values, zero_field
from .coefficients import ModelSpec, eval_slow_reaction
from .integrator import (
    CoupledNoise,
    DivergenceError,
    SlowFastState,
    SolverConfig,
    step_fast,
    step_slow,
)
from .noise import NoisePath

__all__ = [
    "FrozenFastProblem",
    "FrozenTrajectory",
    "ContractionReport",
    "MixingReport",
    "AveragedDriftEstimate",
    "EstimationError",
    "simulate_frozen_fast",
    "contraction_test",
    "estimate_mixing_rate",
    "stationarity_check",
    "estimate_averaged_drift",
    "simulate_averaged",
    "AnalyticDrift",
    "YIndependentDrift",
    "LinearFastMeanDrift",
    "EstimatedDrift",
    "OBSERVABLES",
]


class EstimationError(RuntimeError):
    """Averaged-drift estimation failed (too many exclusions or budget hit)."""


@dataclass(frozen=True)
class FrozenFastProblem:
    """Fast equation with the slow state frozen at ``x``, started at (s, y0)."""

    model: ModelSpec
    x: SpectralField
    s: float
    y0: SpectralField

    def __post_init__(self):
        if not self.x.is_finite():
            raise ValueError("frozen slow state must be finite")


@dataclass
class FrozenTrajectory:
    times: np.ndarray
    fields: list[SpectralField]


def frozen_fast_noise(
    model: ModelSpec,
    config: SolverConfig,
    seed: int,
    path_index: int,
    s: float,
    horizon: float,
    qualifier: int = 0,
) -> NoisePath:
    """Fast-role noise on the micro grid at unit intensity (the frozen clock)."""
    return NoisePath(
        seed=seed, path_index=path_index, kind="fast", t0=s, t1=s + horizon,
        dt=config.h, n_modes=model.basis.n_modes, q_spec=model.q2,
        levy_spec=model.levy2, intensity_scale=1.0, qualifier=qualifier,
    )


def _iter_frozen_fast(problem: FrozenFastProblem, config: SolverConfig, horizon: float, noise: NoisePath):
    """Yield (t_next, y) after every micro step of the frozen fast equation."""
    cfg1 = replace(config, eps=1.0)  # the frozen equation carries no scale separation
    n_steps = round(horizon / config.h)
    if abs(n_steps * config.h - horizon) > 1e-9 * max(horizon, 1.0):
        raise ValueError("micro step must divide the horizon")
    x, y = problem.x, problem.y0
    for i in range(n_steps):
        t = problem.s + i * config.h
        y = step_fast(
            SlowFastState(t, x, y), problem.model, cfg1,
            noise.wiener_increment(i),
            noise.jumps_between(t, t + config.h),
            frozen_x=x,
        )
        yield t + config.h, y


def simulate_frozen_fast(
    problem: FrozenFastProblem,
    config: SolverConfig,
    horizon: float,
    noise: NoisePath | None = None,
    seed: int = 0,
    path_index: int = 0,
) -> FrozenTrajectory:
    """Trajectory of the frozen fast equation, saved every ``save_stride`` micro steps."""
    if horizon <= 0.0:
        raise ValueError("horizon must be positive")
    if noise is None:
        noise = frozen_fast_noise(problem.model, config, seed, path_index, problem.s, horizon)
    times = [problem.s]
    fields = [problem.y0]
    for i, (t, y) in enumerate(_iter_frozen_fast(problem, config, horizon, noise)):
        if (i + 1) % config.save_stride == 0:
            times.append(t)
            fields.append(y)
    return FrozenTrajectory(np.array(times), fields)


def _log_linear_fit(ts: np.ndarray, vals: np.ndarray) -> tuple[float, float, float]:
    """Least-squares fit log(vals) ~ intercept + slope * ts; returns (slope, intercept, R^2)."""
    logs = np.log(vals)
    slope, intercept = np.polyfit(ts, logs, 1)
    pred = slope * ts + intercept
    ss_res = float(np.sum((logs - pred) ** 2))
    ss_tot = float(np.sum((logs - np.mean(logs)) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0.0 else 0.0
    return float(slope), float(intercept), r2


@dataclass
class ContractionReport:
    """Synchronous-coupling decay of the gap between two frozen-fast copies."""

    times: np.ndarray
    gap: np.ndarray  # Monte-Carlo mean of the sup-norm gap
    gap_stderr: np.ndarray
    rate: float  # fitted exponential decay rate (positive = contraction)
    r_squared: float
    degenerate: bool


def contraction_test(
    model: ModelSpec,
    config: SolverConfig,
    x: SpectralField,
    y1: SpectralField,
    y2: SpectralField,
    horizon: float,
    replicas: int = 32,
    seed: int = 0,
) -> ContractionReport:
    """Drive two initial fast states with identical noise and fit the gap decay."""
    if np.array_equal(y1.coeffs, y2.coeffs):
        n_saves = round(horizon / config.h) // config.save_stride
        zeros = np.zeros(n_saves)
        return ContractionReport(np.zeros(n_saves), zeros, zeros.copy(), float("nan"), 0.0, True)

    curves = []
    times = None
    for r in range(replicas):
        noise = frozen_fast_noise(model, config, seed, r, 0.0, horizon)
        p1 = FrozenFastProblem(model, x, 0.0, y1)
        p2 = FrozenFastProblem(model, x, 0.0, y2)
        gaps, ts = [], []
        for (t, a), (_, b) in zip(
            _iter_frozen_fast(p1, config, horizon, noise),
            _iter_frozen_fast(p2, config, horizon, noise),
        ):
            ts.append(t)
            gaps.append((a - b).sup_norm())
        stride = config.save_stride
        curves.append(np.array(gaps)[stride - 1 :: stride])
        times = np.array(ts)[stride - 1 :: stride]
    stack = np.vstack(curves)
    gap = stack.mean(axis=0)
    se = stack.std(axis=0, ddof=1) / math.sqrt(replicas) if replicas > 1 else np.zeros_like(gap)
    usable = gap > 0.0
    if usable.sum() < 3:
        return ContractionReport(times, gap, se, float("nan"), 0.0, True)
    slope, _, r2 = _log_linear_fit(times[usable], gap[usable])
    return ContractionReport(times, gap, se, -slope, r2, False)


def _clip_sup(field: SpectralField, cap: float = 1.0) -> float:
    return min(field.sup_norm(), cap)


OBSERVABLES = {
    "sup_clipped": lambda f: _clip_sup(f),
    "mode1": lambda f: float(f.coeffs[0]),
    "nodal_mean": lambda f: float(np.mean(f.values)),
    "const": lambda f: 1.0,
}


@dataclass
class MixingReport:
    """Decay of |E phi(Y(lag)) - long-run average of phi| over a lag grid."""

    observable: str
    lags: np.ndarray
    envelope: np.ndarray
    stderr: np.ndarray
    long_run_average: float
    rate: float
    r_squared: float
    degenerate: bool


def estimate_mixing_rate(
    model: ModelSpec,
    config: SolverConfig,
    x: SpectralField,
    observable: str,
    lags,
    replicas: int,
    y0: SpectralField,
    seed: int = 0,
    longrun_horizon: float = 8.0,
) -> MixingReport:
    """Fit the exponential envelope of an observable's approach to its long-run mean.

    The long-run average is taken from one independent long trajectory after
    discarding the first quarter as burn-in.  Lags whose envelope is within
    two standard errors of the noise floor are excluded from the fit; fewer
    than three informative lags flags the report as degenerate.
    """
    if replicas < 2:
        raise ValueError("need at least two replicas")
    phi = OBSERVABLES[observable]
    lags = np.asarray(sorted(float(l) for l in lags))
    if lags[0] <= 0.0:
        raise ValueError("lags must be positive")
    if len(np.unique(lags)) != len(lags):
        raise ValueError("lags must be distinct")
    horizon = float(lags[-1])
    steps = [round(l / config.h) for l in lags]
    if any(abs(s * config.h - l) > 1e-9 for s, l in zip(steps, lags)):
        raise ValueError("each lag must be a multiple of the micro step")

    samples = np.empty((replicas, len(lags)))
    for r in range(replicas):
        noise = frozen_fast_noise(model, config, seed, r, 0.0, horizon)
        problem = FrozenFastProblem(model, x, 0.0, y0)
        want = {s: j for j, s in enumerate(steps)}
        for i, (_, y) in enumerate(_iter_frozen_fast(problem, config, horizon, noise)):
            j = want.get(i + 1)
            if j is not None:
                samples[r, j] = phi(y)

    # long-run average from a separate stream, first quarter dropped
    n_long = round(longrun_horizon / config.h)
    noise = frozen_fast_noise(model, config, seed, 999_983, 0.0, n_long * config.h)
    problem = FrozenFastProblem(model, x, 0.0, y0)
    acc, count = 0.0, 0
    burn = n_long // 4
    for i, (_, y) in enumerate(_iter_frozen_fast(problem, config, n_long * config.h, noise)):
        if i >= burn:
            acc += phi(y)
            count += 1
    long_run = acc / count

    mean_phi = samples.mean(axis=0)
    se = samples.std(axis=0, ddof=1) / math.sqrt(replicas)
    envelope = np.abs(mean_phi - long_run)
    usable = envelope > np.maximum(2.0 * se, 1e-14)
    # fit on the informative prefix: past the noise floor the envelope is flat
    cut = len(lags)
    for j in range(len(lags)):
        if not usable[j]:
            cut = j
            break
    if cut < 3:
        return MixingReport(observable, lags, envelope, se, long_run, float("nan"), 0.0, True)
    slope, _, r2 = _log_linear_fit(lags[:cut], envelope[:cut])
    return MixingReport(observable, lags, envelope, se, long_run, -slope, r2, False)


def stationarity_check(
    model: ModelSpec,
    config: SolverConfig,
    x: SpectralField,
    y0: SpectralField,
    horizon: float,
    replicas: int = 16,
    seed: int = 0,
) -> dict:
    """Quarter-wise means of E||Y||^2 along the horizon; a plateau indicates mixing."""
    n_steps = round(horizon / config.h)
    sums = np.zeros(n_steps)
    for r in range(replicas):
        noise = frozen_fast_noise(model, config, seed, r, 0.0, horizon)
        problem = FrozenFastProblem(model, x, 0.0, y0)
        for i, (_, y) in enumerate(_iter_frozen_fast(problem, config, horizon, noise)):
            sums[i] += y.sup_norm() ** 2
    mean_sq = sums / replicas
    q = n_steps // 4
    quarters = [float(np.mean(mean_sq[i * q : (i + 1) * q])) for i in range(4)]
    return {"quarters": quarters, "plateau_ratio": quarters[3] / quarters[2] if quarters[2] > 0 else float("nan")}


@dataclass
class AveragedDriftEstimate:
    """Monte-Carlo time average of the slow reaction against the fast dynamics."""

    estimate: SpectralField
    nodal_values: np.ndarray
    node_stderr: np.ndarray
    t_burn: float
    t_avg: float
    n_traj: int
    excluded: int
    growth_ratio: float

    def rows(self):
        nodes = self.estimate.basis.nodes
        for j in range(nodes.shape[0]):
            yield (float(nodes[j]), float(self.nodal_values[j]), float(self.node_stderr[j]))


def estimate_averaged_drift(
    model: ModelSpec,
    config: SolverConfig,
    x: SpectralField,
    t_burn: float,
    t_avg: float,
    n_traj: int,
    seed: int = 0,
) -> AveragedDriftEstimate:
    """Average the slow reaction along frozen-fast trajectories.

    Each trajectory contributes the time average of b1(xi, x, Y(t)) over
    (t_burn, t_burn + t_avg]; trajectories are then averaged and the spread
    across them gives the per-node standard error.  Diverged trajectories
    are excluded and counted; more than 20% exclusions aborts.
    """
    if t_burn <= 0.0 or t_avg <= 0.0:
        raise ValueError("t_burn and t_avg must be positive")
    if n_traj < 1:
        raise ValueError("n_traj must be >= 1")
    basis = model.basis
    h = config.h
    horizon = (round(t_burn / h) + round(t_avg / h)) * h
    burn_steps = round(t_burn / h)
    fn = model.slow.fn
    x_vals = x.values

    per_traj = []
    excluded = 0
    for j in range(n_traj):
        noise = frozen_fast_noise(model, config, seed, j, 0.0, horizon)
        problem = FrozenFastProblem(model, x, 0.0, zero_field(basis))
        acc = np.zeros(basis.n_nodes)
        count = 0
        try:
            for i, (_, y) in enumerate(_iter_frozen_fast(problem, config, horizon, noise)):
                if i >= burn_steps:
                    acc += fn(basis.nodes, x_vals, y.values)
                    count += 1
        except DivergenceError:
            excluded += 1
            continue
        per_traj.append(acc / count)
    if excluded > 0.2 * n_traj:
        raise EstimationError(f"{excluded}/{n_traj} trajectories diverged during drift estimation")

    stack = np.vstack(per_traj)
    nodal = stack.mean(axis=0)
    n_eff = stack.shape[0]
    stderr = stack.std(axis=0, ddof=1) / math.sqrt(n_eff) if n_eff > 1 else np.zeros_like(nodal)
    est = field_from_values(basis, nodal)
    growth = est.sup_norm() / (1.0 + x.sup_norm() ** model.slow.m1)
    return AveragedDriftEstimate(est, nodal, stderr, t_burn, t_avg, n_eff, excluded, growth)


# --------------------------------------------------------------------------
# drift providers


class AnalyticDrift:
    """Wrap a closed-form averaged drift given as a nodal-values function."""

    def __init__(self, fn, description: str = "analytic"):
        self._fn = fn
        self.description = description

    def drift_values(self, x: SpectralField) -> np.ndarray:
        return self._fn(x)


class YIndependentDrift:
    """Exact averaged drift when the slow reaction does not involve the fast state."""

    def __init__(self, model: ModelSpec):
        if model.slow.depends_on_y:
            raise ValueError("slow reaction depends on y; the identity drift does not apply")
        self._model = model
        self.description = "identity (slow reaction is independent of the fast state)"

    def drift_values(self, x: SpectralField) -> np.ndarray:
        basis = self._model.basis
        return self._model.slow.fn(basis.nodes, x.values, np.zeros(basis.n_nodes))


class LinearFastMeanDrift:
    """Closed-form averaged drift for fast reactions linear in the fast state.

    For b2 = -rate * y + x * g(t) (no transport), the mean of the fast state
    with frozen slow field x is diagonal in the eigenbasis: mode k follows
    psi_k' = -(gamma(t) alpha_k + alpha + rate) psi_k + g(t), and the
    averaged drift replaces the fast argument of the slow reaction by the
    time average of the periodic attractor, mode-wise proportional to x.
    Requires the slow reaction to be affine in its fast argument, which is
    verified on samples at construction.
    """

    def __init__(self, model: ModelSpec, config: SolverConfig, periods: int = 1, ode_steps_per_period: int = 4096):
        fast = model.fast
        if not (fast.linear_in_y and fast.x_gain is not None and fast.y_rate > 0.0):
            raise ValueError("fast reaction is not linear in y with a scalar slow-state gain")
        probe = model.profile.transport(0.1234, model.basis.nodes)
        if np.any(probe != 0.0):
            raise ValueError("closed-form mean drift requires zero transport")
        rng = np.random.default_rng(7)
        xi = rng.uniform(0, 1, 64)
        xs = rng.uniform(-3, 3, 64)
        y1 = rng.uniform(-3, 3, 64)
        y2 = rng.uniform(-3, 3, 64)
        lhs = model.slow.fn(xi, xs, 0.5 * (y1 + y2))
        rhs = 0.5 * (model.slow.fn(xi, xs, y1) + model.slow.fn(xi, xs, y2))
        if float(np.max(np.abs(lhs - rhs))) > 1e-9:
            raise ValueError("slow reaction is not affine in the fast state")

        self._model = model
        self._mean_gain = self._periodic_mean_gain(model, config, periods, ode_steps_per_period)
        self.description = "linear-fast mean oracle"

    @staticmethod
    def _periodic_mean_gain(model: ModelSpec, config: SolverConfig, periods: int, steps_per_period: int) -> np.ndarray:
        """Time average over one period of the attractor of the mode-wise mean dynamics.

        Uses exponential midpoint stepping (coefficients frozen at the step
        midpoint, linear part solved exactly), which is unconditionally
        stable however stiff the top retained mode is and reproduces the
        quasi-static limit psi ~ g / lambda exactly.
        """
        alpha_k = model.basis.eigs_2
        rate = model.fast.y_rate
        gain = model.fast.x_gain
        gamma = model.profile.gamma
        period = model.profile.period
        damping = float(np.min(alpha_k) * model.profile.gamma_lower + config.alpha + rate)
        t_relax = max(25.0 / damping, 2.0 * period)
        dt = period / steps_per_period

        def advance(t, psi):
            lam = gamma(t + 0.5 * dt) * alpha_k + config.alpha + rate
            decay = np.exp(-lam * dt)
            return decay * psi + (1.0 - decay) * (gain(t + 0.5 * dt) / lam)

        psi = np.zeros_like(alpha_k)
        t = 0.0
        for _ in range(math.ceil(t_relax / dt)):
            psi = advance(t, psi)
            t += dt
        acc = np.zeros_like(psi)
        n_avg = periods * steps_per_period
        for _ in range(n_avg):
            new = advance(t, psi)
            acc += 0.5 * (psi + new)
            psi = new
            t += dt
        return acc / n_avg

    def mean_fast_field(self, x: SpectralField) -> SpectralField:
        return SpectralField(x.basis, self._mean_gain * x.coeffs)

    def drift_values(self, x: SpectralField) -> np.ndarray:
        basis = self._model.basis
        return self._model.slow.fn(basis.nodes, x.values, self.mean_fast_field(x).values)


class EstimatedDrift:
    """On-demand Monte-Carlo averaged drift with a quantized cache.

    The cache key is the coefficient vector rounded to ``quantum`` (0 means
    exact keys, no approximate reuse).  With ``reuse_tol`` > 0 the nearest
    cached entry within that sup-norm distance is reused, trading bias for
    speed.  ``max_estimates`` bounds the number of fresh estimations.
    """

    def __init__(
        self,
        model: ModelSpec,
        config: SolverConfig,
        t_burn: float,
        t_avg: float,
        n_traj: int,
        seed: int = 0,
        quantum: float = 0.0,
        reuse_tol: float = 0.0,
        max_estimates: int | None = None,
    ):
        self._model = model
        self._config = config
        self._t_burn = t_burn
        self._t_avg = t_avg
        self._n_traj = n_traj
        self._seed = seed
        self._quantum = quantum
        self._reuse_tol = reuse_tol
        self._max = max_estimates
        self._cache: dict[bytes, tuple[SpectralField, np.ndarray]] = {}
        self._fields: list[tuple[SpectralField, np.ndarray]] = []
        self.misses = 0
        self.hits = 0
        self.description = f"estimated (n_traj={n_traj}, t_avg={t_avg:g}, quantum={quantum:g})"

    def _key(self, x: SpectralField) -> bytes:
        if self._quantum > 0.0:
            q = np.round(x.coeffs / self._quantum) * self._quantum
            return q.tobytes()
        return x.coeffs.tobytes()

    def drift_values(self, x: SpectralField) -> np.ndarray:
        key = self._key(x)
        hit = self._cache.get(key)
        if hit is not None:
            self.hits += 1
            return hit[1]
        if self._reuse_tol > 0.0:
            best, best_d = None, self._reuse_tol
            for cached_x, vals in self._fields:
                d = (cached_x - x).sup_norm()
                if d <= best_d:
                    best, best_d = vals, d
            if best is not None:
                self.hits += 1
                return best
        if self._max is not None and self.misses >= self._max:
            raise EstimationError(
                f"drift-estimation budget exhausted: {self.misses} estimates, "
                f"{self.hits} cache hits, {len(self._cache)} entries"
            )
        est = estimate_averaged_drift(
            self._model, self._config, x, self._t_burn, self._t_avg, self._n_traj,
            seed=self._seed + self.misses,
        )
        self.misses += 1
        self._cache[key] = (x, est.nodal_values)
        self._fields.append((x, est.nodal_values))
        return est.nodal_values


def simulate_averaged(
    model: ModelSpec,
    bbar,
    config: SolverConfig,
    x0: SpectralField,
    slow_noise: NoisePath,
) -> list[SlowFastState]:
    """Averaged slow equation driven by the *same* slow noise as a full run.

    ``bbar`` is any drift provider (or bare callable field -> nodal values).
    The step mirrors the coupled slow step operation-for-operation, so an
    analytic provider equal to the original reaction reproduces it
    bit-identically.
    """
    if slow_noise.dt != config.dt:
        raise ValueError("slow noise grid does not match the macro step")
    drift_values = bbar.drift_values if hasattr(bbar, "drift_values") else bbar
    basis = model.basis
    dt = config.dt

    def clamp(x: SpectralField) -> SpectralField:
        if config.stop_radius is None:
            return x
        n = config.cutoff_radius if config.cutoff_radius is not None else config.stop_radius
        return field_from_values(basis, np.clip(x.values, -n, n))

    hit, hit_time = False, None
    x = x0
    if config.stop_radius is not None and x.sup_norm() >= config.stop_radius:
        hit, hit_time = True, 0.0
    y_placeholder = zero_field(basis)
    out = [SlowFastState(0.0, x0, y_placeholder, hit, hit_time)]
    for k in range(config.n_macro):
        tk = k * config.dt
        x_in = clamp(x) if hit else x
        nodal = dt * drift_values(x_in)
        nodal = nodal + model.f1_values(x.values) * (basis.synthesis @ slow_noise.wiener_increment(k))
        comp = model.g1_compensator(x.values)
        jumps = slow_noise.jumps_between(tk, tk + dt)
        if len(jumps):
            amps = model.g1_values(x.values, jumps.marks)
            nodal = nodal + (amps.sum(axis=0) - dt * comp)
        else:
            nodal = nodal - dt * comp
        bracket = x.coeffs + basis.analysis @ nodal
        coeffs = np.exp(-basis.eigs_1 * dt) * bracket
        if not np.all(np.isfinite(coeffs)):
            raise DivergenceError(tk + dt, "averaged slow component")
        x = SpectralField(basis, coeffs)
        t_next = (k + 1) * dt
        if not hit and config.stop_radius is not None and x.sup_norm() >= config.stop_radius:
            hit, hit_time = True, t_next
        if (k + 1) % config.save_stride == 0 or k + 1 == config.n_macro:
            out.append(SlowFastState(t_next, x, y_placeholder, hit, hit_time))
    return out
