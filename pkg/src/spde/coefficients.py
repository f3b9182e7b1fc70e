"""Reaction, diffusion and jump coefficient families and their audits.

Coefficients are scalar functions applied node-wise (composition operators)
and re-projected onto the retained modes.  Families are selected by name
with a small parameter table; custom coefficients can be given as
expressions over the allowed variables using polynomials composed with
sin, cos and tanh.

The audit does not prove anything: it spot-checks every structural
inequality the solver relies on, on a documented random sample grid, and
reports the worst margin seen.  Growth constants are fitted on a
calibration region and tested with slack on a wider region, so genuinely
super-polynomial coefficients fail with a positive violation margin.
"""

from __future__ import annotations

import ast
import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .basis import BasisSpec, SpectralField, TimeProfile, field_from_values
from .noise import LevyMeasureSpec, QWienerSpec

__all__ = [
    "SlowReactionSpec",
    "FastReactionSpec",
    "DiffusionJumpSpec",
    "ModelSpec",
    "make_slow_reaction",
    "make_fast_reaction",
    "make_diffusion_jump",
    "eval_slow_reaction",
    "eval_fast_reaction",
    "eval_diffusion_jump",
    "cutoff_reaction",
    "audit_assumptions",
    "AuditEntry",
    "AuditReport",
    "compile_expression",
]


# --------------------------------------------------------------------------
# expression DSL: polynomial arithmetic composed with sin / cos / tanh

_ALLOWED_CALLS = {"sin": np.sin, "cos": np.cos, "tanh": np.tanh}
_ALLOWED_CONSTS = {"pi": math.pi}
_ALLOWED_NODES = (
    ast.Expression,
    ast.BinOp,
    ast.UnaryOp,
    ast.Add,
    ast.Sub,
    ast.Mult,
    ast.Div,
    ast.Pow,
    ast.USub,
    ast.UAdd,
    ast.Call,
    ast.Name,
    ast.Load,
    ast.Constant,
)


def compile_expression(text: str, variables: tuple[str, ...]) -> Callable:
    """Compile a coefficient expression to a vectorized callable.

    Grammar: numbers, the listed variables, ``pi``, the operators
    + - * / ^ (or **), parentheses, and calls to sin/cos/tanh.
    """
    tree = ast.parse(text.replace("^", "**"), mode="eval")
    for node in ast.walk(tree):
        if not isinstance(node, _ALLOWED_NODES):
            raise ValueError(f"expression uses disallowed syntax: {type(node).__name__}")
        if isinstance(node, ast.Call):
            if not isinstance(node.func, ast.Name) or node.func.id not in _ALLOWED_CALLS:
                raise ValueError("only sin, cos and tanh may be called")
            if len(node.args) != 1 or node.keywords:
                raise ValueError("coefficient functions take exactly one argument")
        if isinstance(node, ast.Name) and node.id not in variables and node.id not in _ALLOWED_CALLS and node.id not in _ALLOWED_CONSTS:
            raise ValueError(f"unknown name {node.id!r}; allowed variables: {variables}")
        if isinstance(node, ast.Constant) and not isinstance(node.value, (int, float)):
            raise ValueError("only numeric literals are allowed")
    code = compile(tree, "<coefficient>", "eval")
    env = {"__builtins__": {}}
    env.update(_ALLOWED_CALLS)
    env.update(_ALLOWED_CONSTS)

    def fn(**kwargs):
        return eval(code, env, kwargs)

    fn.expression = text  # type: ignore[attr-defined]
    return fn


# --------------------------------------------------------------------------
# coefficient families


@dataclass(frozen=True)
class SlowReactionSpec:
    """Reaction b1(xi, x, y) of the slow equation.

    ``m1`` is the polynomial growth exponent in x, ``kappa`` the local
    Lipschitz exponent; both are metadata consumed by the audits.
    """

    name: str
    fn: Callable  # (xi, x, y) -> array, vectorized
    m1: float = 3.0
    kappa: float = 2.0
    depends_on_y: bool = True


@dataclass(frozen=True)
class FastReactionSpec:
    """Reaction b2(t, xi, x, y) of the fast equation.

    Built-ins are nonincreasing in y.  When the family is linear in y with
    unit decay rate and the slow state enters only through a scalar gain
    g(t) (``x_gain``), the mean dynamics close and an exact averaged-drift
    oracle exists.
    """

    name: str
    fn: Callable  # (t, xi, x, y) -> array, vectorized
    m2: float = 3.0
    period: float = 1.0
    linear_in_y: bool = False
    y_rate: float = 0.0
    x_gain: Callable[[float], float] | None = None


@dataclass(frozen=True)
class DiffusionJumpSpec:
    """Multiplicative noise amplitudes f1, f2 and jump amplitudes g1, g2.

    Each leg is (family, scale): family 'tanh' is scale*(1+tanh(u)) for f
    and scale*z*tanh(u) for g, 'const' is scale (f) / scale*z (g), 'zero'
    switches the leg off.  All built-ins are bounded with Lipschitz
    constant equal to the scale.
    """

    f1: Callable  # (xi, x) -> array
    f2: Callable  # (t, xi, y) -> array
    g1: Callable  # (xi, x, z) -> array
    g2: Callable  # (t, xi, y, z) -> array
    f1_lipschitz: float = 0.0
    f2_lipschitz: float = 0.0
    g1_lipschitz: float = 0.0  # Lipschitz in the state per unit |z|
    g2_lipschitz: float = 0.0
    g1_z_linear: bool = True  # lets the compensator short-circuit for centered marks
    g2_z_linear: bool = True
    names: tuple[str, str, str, str] = ("zero", "zero", "zero", "zero")


def make_slow_reaction(name: str, m1: float | None = None, kappa: float | None = None) -> SlowReactionSpec:
    if name == "fhn":
        return SlowReactionSpec("fhn", lambda xi, x, y: x - x**3 + y, m1=3.0, kappa=2.0, depends_on_y=True)
    if name == "cubic":
        return SlowReactionSpec("cubic", lambda xi, x, y: x - x**3 + 0.0 * y, m1=3.0, kappa=2.0, depends_on_y=False)
    if name == "zero":
        return SlowReactionSpec("zero", lambda xi, x, y: np.zeros(np.broadcast(xi, x, y).shape), m1=1.0, kappa=1.0, depends_on_y=False)
    if name == "exp_growth":
        # deliberately super-polynomial; exists so audits have a counterexample
        return SlowReactionSpec("exp_growth", lambda xi, x, y: np.exp(x), m1=3.0, kappa=2.0, depends_on_y=False)
    if name.startswith("expr:"):
        fn = compile_expression(name[5:], ("xi", "x", "y"))
        text = name[5:]
        return SlowReactionSpec(
            name,
            lambda xi, x, y: np.broadcast_to(np.asarray(fn(xi=xi, x=x, y=y), dtype=float), np.broadcast(xi, x, y).shape).copy(),
            m1=3.0 if m1 is None else m1,
            kappa=2.0 if kappa is None else kappa,
            depends_on_y="y" in _expression_names(text),
        )
    raise ValueError(f"unknown slow reaction family {name!r}")


def make_fast_reaction(
    name: str,
    a: float = 1.0,
    c: float = 0.0,
    period: float = 1.0,
    m2: float | None = None,
) -> FastReactionSpec:
    omega = 2.0 * math.pi / period

    def gain(t):
        # np.sin so the gain accepts both a scalar step time and an audit batch
        return a + c * np.sin(omega * t)

    if name == "cubic_decay":
        if abs(c) > a:
            raise ValueError("cubic_decay needs |c| <= a so the slow-state gain keeps one sign")
        return FastReactionSpec(
            "cubic_decay",
            lambda t, xi, x, y: -(y**3) - y + x * gain(t),
            m2=3.0,
            period=period,
            linear_in_y=False,
            y_rate=1.0,
            x_gain=gain,
        )
    if name == "linear":
        if abs(c) > a:
            raise ValueError("linear fast reaction needs |c| <= a")
        return FastReactionSpec(
            "linear",
            lambda t, xi, x, y: -y + x * gain(t),
            m2=1.0,
            period=period,
            linear_in_y=True,
            y_rate=1.0,
            x_gain=gain,
        )
    if name == "zero":
        return FastReactionSpec(
            "zero",
            lambda t, xi, x, y: np.zeros(np.broadcast(xi, x, y).shape),
            m2=1.0,
            period=period,
            linear_in_y=True,
            y_rate=0.0,
            x_gain=None,
        )
    if name.startswith("expr:"):
        fn = compile_expression(name[5:], ("t", "xi", "x", "y"))
        return FastReactionSpec(
            name,
            lambda t, xi, x, y: np.broadcast_to(np.asarray(fn(t=t, xi=xi, x=x, y=y), dtype=float), np.broadcast(xi, x, y).shape).copy(),
            m2=3.0 if m2 is None else m2,
            period=period,
        )
    raise ValueError(f"unknown fast reaction family {name!r}")


def _expression_names(text: str) -> set[str]:
    return {n.id for n in ast.walk(ast.parse(text.replace("^", "**"), mode="eval")) if isinstance(n, ast.Name)}


def _f_leg(family: str, scale: float, with_t: bool) -> tuple[Callable, float]:
    if family == "tanh":
        if with_t:
            return (lambda t, xi, u: scale * (1.0 + np.tanh(u)) + 0.0 * xi), scale
        return (lambda xi, u: scale * (1.0 + np.tanh(u)) + 0.0 * xi), scale
    if family == "const":
        if with_t:
            return (lambda t, xi, u: scale + 0.0 * u + 0.0 * xi), 0.0
        return (lambda xi, u: scale + 0.0 * u + 0.0 * xi), 0.0
    if family == "zero":
        if with_t:
            return (lambda t, xi, u: 0.0 * u + 0.0 * xi), 0.0
        return (lambda xi, u: 0.0 * u + 0.0 * xi), 0.0
    raise ValueError(f"unknown diffusion family {family!r}")


def _g_leg(family: str, scale: float, with_t: bool) -> tuple[Callable, float]:
    if family == "tanh":
        if with_t:
            return (lambda t, xi, u, z: scale * z * np.tanh(u) + 0.0 * xi), scale
        return (lambda xi, u, z: scale * z * np.tanh(u) + 0.0 * xi), scale
    if family == "linear_z":
        if with_t:
            return (lambda t, xi, u, z: scale * z + 0.0 * u + 0.0 * xi), 0.0
        return (lambda xi, u, z: scale * z + 0.0 * u + 0.0 * xi), 0.0
    if family == "zero":
        if with_t:
            return (lambda t, xi, u, z: 0.0 * u + 0.0 * xi + 0.0 * z), 0.0
        return (lambda xi, u, z: 0.0 * u + 0.0 * xi + 0.0 * z), 0.0
    raise ValueError(f"unknown jump family {family!r}")


def make_diffusion_jump(
    f1: tuple[str, float] = ("tanh", 0.1),
    f2: tuple[str, float] = ("tanh", 0.2),
    g1: tuple[str, float] = ("tanh", 0.1),
    g2: tuple[str, float] = ("tanh", 0.1),
) -> DiffusionJumpSpec:
    f1_fn, f1_lip = _f_leg(*f1, with_t=False)
    f2_fn, f2_lip = _f_leg(*f2, with_t=True)
    g1_fn, g1_lip = _g_leg(*g1, with_t=False)
    g2_fn, g2_lip = _g_leg(*g2, with_t=True)
    return DiffusionJumpSpec(
        f1=f1_fn,
        f2=f2_fn,
        g1=g1_fn,
        g2=g2_fn,
        f1_lipschitz=f1_lip,
        f2_lipschitz=f2_lip,
        g1_lipschitz=g1_lip,
        g2_lipschitz=g2_lip,
        g1_z_linear=g1[0] in ("tanh", "linear_z", "zero"),
        g2_z_linear=g2[0] in ("tanh", "linear_z", "zero"),
        names=(f1[0], f2[0], g1[0], g2[0]),
    )


@dataclass(frozen=True)
class ModelSpec:
    """Full problem statement: basis, operator profile, coefficients, noise."""

    name: str
    basis: BasisSpec
    profile: TimeProfile
    slow: SlowReactionSpec
    fast: FastReactionSpec
    diffjump: DiffusionJumpSpec
    q1: QWienerSpec
    q2: QWienerSpec
    levy1: LevyMeasureSpec
    levy2: LevyMeasureSpec

    # nodal helpers used by the integrator hot loop -------------------------

    def f1_values(self, x_values: np.ndarray) -> np.ndarray:
        return self.diffjump.f1(self.basis.nodes, x_values)

    def f2_values(self, t: float, y_values: np.ndarray) -> np.ndarray:
        return self.diffjump.f2(t, self.basis.nodes, y_values)

    def g1_values(self, x_values: np.ndarray, marks: np.ndarray) -> np.ndarray:
        """One row of nodal amplitudes per mark."""
        return self.diffjump.g1(self.basis.nodes[None, :], x_values[None, :], np.asarray(marks)[:, None])

    def g2_values(self, t: float, y_values: np.ndarray, marks: np.ndarray) -> np.ndarray:
        return self.diffjump.g2(t, self.basis.nodes[None, :], y_values[None, :], np.asarray(marks)[:, None])

    def g1_compensator(self, x_values: np.ndarray) -> np.ndarray:
        """Nodal nu-integral of g1(., x, z), by quadrature against the mark law.

        Amplitudes linear in the mark integrate to zero against the centered
        built-in laws, which short-circuits the quadrature in the hot loop.
        """
        if self.diffjump.g1_z_linear and self.levy1.mark_mean() == 0.0:
            return np.zeros(self.basis.n_nodes)
        z, w = self.levy1.quadrature()
        vals = self.diffjump.g1(self.basis.nodes[None, :], x_values[None, :], z[:, None])
        return self.levy1.intensity * (w @ vals)

    def g2_compensator(self, t: float, y_values: np.ndarray) -> np.ndarray:
        if self.diffjump.g2_z_linear and self.levy2.mark_mean() == 0.0:
            return np.zeros(self.basis.n_nodes)
        z, w = self.levy2.quadrature()
        vals = self.diffjump.g2(t, self.basis.nodes[None, :], y_values[None, :], z[:, None])
        return self.levy2.intensity * (w @ vals)


# --------------------------------------------------------------------------
# composition (node-then-project) evaluation


def eval_slow_reaction(spec: SlowReactionSpec, x: SpectralField, y: SpectralField) -> SpectralField:
    """Slow reaction applied node-wise, then re-projected onto the modes."""
    if x.basis is not y.basis:
        raise ValueError("x and y live on different bases")
    vals = spec.fn(x.basis.nodes, x.values, y.values)
    return field_from_values(x.basis, vals)


def eval_fast_reaction(spec: FastReactionSpec, t: float, x: SpectralField, y: SpectralField) -> SpectralField:
    if x.basis is not y.basis:
        raise ValueError("x and y live on different bases")
    vals = spec.fn(t, x.basis.nodes, x.values, y.values)
    return field_from_values(x.basis, vals)


def eval_diffusion_jump(
    spec: DiffusionJumpSpec,
    t: float,
    state: SpectralField,
    mark: float | None = None,
    which: int = 1,
) -> np.ndarray:
    """Nodal noise amplitude: f (mark None) or g at the given mark."""
    nodes = state.basis.nodes
    u = state.values
    if which == 1:
        return spec.f1(nodes, u) if mark is None else spec.g1(nodes, u, mark)
    if which == 2:
        return spec.f2(t, nodes, u) if mark is None else spec.g2(t, nodes, u, mark)
    raise ValueError("which must be 1 (slow) or 2 (fast)")


def _radial_clamp(x, y, n):
    r = np.hypot(x, y)
    with np.errstate(invalid="ignore", divide="ignore"):
        s = np.where(r > n, n / np.where(r > 0, r, 1.0), 1.0)
    return x * s, y * s


def cutoff_reaction(spec, n: float):
    """Radial truncation outside the ball |(x, y)| <= n of the state plane.

    Inside the ball the coefficient is untouched, outside it is evaluated at
    the radially rescaled point, so the cutoff is continuous and two cutoffs
    with radii m <= n agree with the original on the smaller ball.
    """
    if n <= 0.0:
        raise ValueError(f"cutoff radius must be positive, got {n}")
    if isinstance(spec, SlowReactionSpec):
        base = spec.fn

        def cut_slow(xi, x, y, _b=base, _n=float(n)):
            xc, yc = _radial_clamp(x, y, _n)
            return _b(xi, xc, yc)

        return replace(spec, name=f"{spec.name}|cutoff:{n:g}", fn=cut_slow)
    if isinstance(spec, FastReactionSpec):
        base = spec.fn

        def cut_fast(t, xi, x, y, _b=base, _n=float(n)):
            xc, yc = _radial_clamp(x, y, _n)
            return _b(t, xi, xc, yc)

        return replace(
            spec,
            name=f"{spec.name}|cutoff:{n:g}",
            fn=cut_fast,
            linear_in_y=False,
            x_gain=None,
        )
    raise TypeError(f"cannot cut off {type(spec).__name__}")


# --------------------------------------------------------------------------
# assumption audit


@dataclass(frozen=True)
class AuditEntry:
    name: str
    passed: bool
    margin: float  # slack when passing, violation magnitude when failing
    fitted_constant: float
    detail: str


@dataclass(frozen=True)
class AuditReport:
    entries: tuple[AuditEntry, ...]

    @property
    def all_passed(self) -> bool:
        return all(e.passed for e in self.entries)

    def failed(self) -> list[AuditEntry]:
        return [e for e in self.entries if not e.passed]

    def __getitem__(self, name: str) -> AuditEntry:
        for e in self.entries:
            if e.name == name:
                return e
        raise KeyError(name)


_CAL_RADIUS = 5.0  # growth constants are fitted on |state| <= 5 ...
_TEST_RADIUS = 50.0  # ... and tested with slack out to |state| <= 50
_SLACK = 1.5
_C_FLOOR = 1.0


def _ratio_check(name, worst_cal, worst_test, detail):
    c_fit = max(worst_cal, 0.0)
    bound = _SLACK * max(c_fit, _C_FLOOR)
    passed = worst_test <= bound
    # margin is the slack when passing and the violation magnitude when failing
    margin = bound - worst_test if passed else worst_test - bound
    return AuditEntry(name, passed, float(margin), float(c_fit), detail)


def audit_assumptions(model: ModelSpec, sample_budget: int = 2000, seed: int = 0) -> AuditReport:
    """Numerically spot-check the structural conditions on random samples.

    Failures are report entries, never exceptions.  Growth-type checks fit
    their constant on a calibration region and test it (with slack 1.5x) on
    a 10x wider region, so polynomially bounded coefficients pass while a
    super-polynomial one fails with a positive violation margin.
    """
    rng = np.random.default_rng(seed)
    n = max(int(sample_budget), 1)
    xi = rng.uniform(0.0, 1.0, n)
    ts = rng.uniform(0.0, 3.0 * model.profile.period, n)
    entries: list[AuditEntry] = []

    def sample_state(radius):
        return rng.uniform(-radius, radius, n), rng.uniform(-radius, radius, n)

    # operator profile ------------------------------------------------------
    prof = model.profile
    gvals = np.array([prof.gamma(float(t)) for t in ts])
    worst = max(float(np.max(gvals - prof.gamma_upper)), float(np.max(prof.gamma_lower - gvals)))
    entries.append(
        AuditEntry("profile_gamma_bounds", worst <= 1e-12, 1e-12 - worst, prof.gamma_upper, "gamma stays inside its declared band")
    )
    lvals = np.abs(np.array([prof.transport(float(t), xi) for t in ts[:64]]))
    lmax = float(np.max(lvals)) if lvals.size else 0.0
    entries.append(AuditEntry("profile_transport_bounded", bool(np.isfinite(lmax)), lmax, lmax, "transport coefficient is bounded on samples"))
    per = prof.period
    dgam = max(abs(prof.gamma(float(t) + per) - prof.gamma(float(t))) for t in ts[:64])
    dl = max(float(np.max(np.abs(prof.transport(float(t) + per, xi) - prof.transport(float(t), xi)))) for t in ts[:64])
    entries.append(AuditEntry("profile_periodicity", max(dgam, dl) <= 1e-9, 1e-9 - max(dgam, dl), per, "gamma and transport share the period"))

    # covariance spectra ----------------------------------------------------
    for label, q in (("slow", model.q1), ("fast", model.q2)):
        tails = q.tail_check()
        worst_ratio = max(tails.values())
        entries.append(
            AuditEntry(
                f"covariance_trace_tails_{label}",
                worst_ratio < 1.0,
                1.0 - worst_ratio,
                worst_ratio,
                "dyadic tail increments of both admissibility sums shrink",
            )
        )

    # slow reaction ---------------------------------------------------------
    b1 = model.slow.fn
    m1, kap = model.slow.m1, model.slow.kappa

    def b1_growth_ratio(radius):
        x, y = sample_state(radius)
        denom = 1.0 + np.abs(x) ** m1 + np.abs(y)
        return float(np.max(np.abs(b1(xi, x, y)) / denom))

    entries.append(
        _ratio_check(
            "slow_reaction_growth",
            b1_growth_ratio(_CAL_RADIUS),
            b1_growth_ratio(_TEST_RADIUS),
            f"|b1| <= C (1 + |x|^{m1:g} + |y|)",
        )
    )

    def b1_onesided_ratio(radius):
        x, y = sample_state(radius)
        h1 = rng.uniform(-radius, radius, n)
        h2 = rng.uniform(-radius, radius, n)
        lhs = (b1(xi, x + h1, y + h2) - b1(xi, x, y)) * h1
        denom = np.abs(h1) * (1.0 + np.hypot(x, y) + np.hypot(h1, h2)) + 1e-300
        return float(np.max(lhs / denom))

    entries.append(
        _ratio_check(
            "slow_reaction_one_sided",
            b1_onesided_ratio(_CAL_RADIUS),
            b1_onesided_ratio(_TEST_RADIUS),
            "(b1(x+h) - b1(x)) h1 <= C |h1| (1 + |x| + |h|)",
        )
    )

    def b1_lipschitz_ratio(radius):
        x1, y1 = sample_state(radius)
        x2, y2 = sample_state(radius)
        num = np.abs(b1(xi, x1, y1) - b1(xi, x2, y2))
        s1 = np.hypot(x1, y1) ** kap
        s2 = np.hypot(x2, y2) ** kap
        dist = np.hypot(x1 - x2, y1 - y2) + 1e-300
        return float(np.max(num / ((1.0 + s1 + s2) * dist)))

    entries.append(
        _ratio_check(
            "slow_reaction_local_lipschitz",
            b1_lipschitz_ratio(_CAL_RADIUS),
            b1_lipschitz_ratio(_TEST_RADIUS),
            f"|b1(s1) - b1(s2)| <= C (1 + |s1|^{kap:g} + |s2|^{kap:g}) |s1 - s2|",
        )
    )

    # fast reaction ---------------------------------------------------------
    b2 = model.fast.fn
    m2 = model.fast.m2

    def b2_growth_ratio(radius):
        x, y = sample_state(radius)
        denom = 1.0 + np.abs(x) + np.abs(y) ** m2
        return float(np.max(np.abs(b2(ts, xi, x, y)) / denom))

    entries.append(
        _ratio_check(
            "fast_reaction_growth",
            b2_growth_ratio(_CAL_RADIUS),
            b2_growth_ratio(_TEST_RADIUS),
            f"|b2| <= C (1 + |x| + |y|^{m2:g})",
        )
    )

    def b2_onesided_ratio(radius):
        x, y = sample_state(radius)
        h1 = rng.uniform(-radius, radius, n)
        h2 = rng.uniform(-radius, radius, n)
        lhs = (b2(ts, xi, x + h1, y + h2) - b2(ts, xi, x, y)) * h2
        denom = np.abs(h2) * (1.0 + np.hypot(x, y) + np.hypot(h1, h2)) + 1e-300
        return float(np.max(lhs / denom))

    entries.append(
        _ratio_check(
            "fast_reaction_one_sided",
            b2_onesided_ratio(_CAL_RADIUS),
            b2_onesided_ratio(_TEST_RADIUS),
            "(b2(s+h) - b2(s)) h2 <= C |h2| (1 + |s| + |h|)",
        )
    )

    # x-shift structure: all shift differences share one sign, and are
    # Lipschitz in the shift on bounded x (sampled only; a global check is
    # out of reach numerically)
    x, y = sample_state(_CAL_RADIUS)
    h = rng.uniform(1e-3, _CAL_RADIUS, n)
    rho_vals = b2(ts, xi, x + h, y) - b2(ts, xi, x, y)
    sign_ok = bool(float(np.min(rho_vals)) * float(np.max(rho_vals)) >= -1e-12)
    entries.append(
        AuditEntry(
            "fast_reaction_x_shift_sign",
            sign_ok,
            float(np.min(rho_vals) * np.max(rho_vals)),
            0.0,
            "b2(x+h) - b2(x) keeps one sign over sampled (t, xi, x, y, h>0)",
        )
    )
    lip_ratio = float(np.max(np.abs(rho_vals) / h))
    gain_bound = abs(float(model.fast.x_gain(0.0))) if model.fast.x_gain else lip_ratio
    entries.append(
        AuditEntry(
            "fast_reaction_x_shift_lipschitz",
            bool(np.isfinite(lip_ratio)),
            lip_ratio,
            max(lip_ratio, gain_bound),
            "|b2(x1,y) - b2(x2,y)| <= L_R |x1 - x2| for x in a bounded ball",
        )
    )

    y1 = rng.uniform(-_CAL_RADIUS, _CAL_RADIUS, n)
    y2 = rng.uniform(-_CAL_RADIUS, _CAL_RADIUS, n)
    dy = y1 - y2
    keep = np.abs(dy) > 1e-8
    slope = (b2(ts, xi, x, y1) - b2(ts, xi, x, y2))[keep] / dy[keep]
    worst_slope = float(np.max(slope)) if slope.size else 0.0
    entries.append(
        AuditEntry(
            "fast_reaction_dissipative_in_y",
            worst_slope <= 1e-12,
            1e-12 - worst_slope,
            worst_slope,
            "difference quotients of b2 in y are nonpositive",
        )
    )
    dper = float(np.max(np.abs(b2(ts + model.fast.period, xi, x, y) - b2(ts, xi, x, y))))
    entries.append(AuditEntry("fast_reaction_periodicity", dper <= 1e-9, 1e-9 - dper, model.fast.period, "b2 repeats after one period"))

    # noise coefficients ----------------------------------------------------
    dj = model.diffjump
    x1, _ = sample_state(_CAL_RADIUS)
    x2, _ = sample_state(_CAL_RADIUS)
    dx = np.abs(x1 - x2) + 1e-300
    f1_ratio = float(np.max(np.abs(dj.f1(xi, x1) - dj.f1(xi, x2)) / dx))
    f2_ratio = float(np.max(np.abs(dj.f2(ts, xi, x1) - dj.f2(ts, xi, x2)) / dx))
    z1, w1 = model.levy1.quadrature()
    z2q, w2q = model.levy2.quadrature()
    worst_lip = 0.0
    for p in (1, 2, 4):
        gm1 = w1 @ np.abs(dj.g1(xi[None, :], x1[None, :], z1[:, None]) - dj.g1(xi[None, :], x2[None, :], z1[:, None])) ** p
        gm2 = w2q @ np.abs(dj.g2(ts[None, :], xi[None, :], x1[None, :], z2q[:, None]) - dj.g2(ts[None, :], xi[None, :], x2[None, :], z2q[:, None])) ** p
        c1 = model.levy1.intensity * float(np.max(gm1 / dx**p))
        c2 = model.levy2.intensity * float(np.max(gm2 / dx**p))
        worst_lip = max(worst_lip, c1, c2)
    lip_ok = np.isfinite(worst_lip) and max(f1_ratio, f2_ratio) < np.inf
    entries.append(
        AuditEntry(
            "noise_coeff_lipschitz",
            bool(lip_ok),
            max(f1_ratio, f2_ratio, worst_lip),
            max(f1_ratio, f2_ratio),
            "f and g are state-Lipschitz; nu-integrated increments of g are p-Lipschitz",
        )
    )

    def noise_growth_ratio(radius):
        xs, _ = sample_state(radius)
        worst = 0.0
        for p in (2, 4):
            fv = np.abs(dj.f1(xi, xs)) ** p + model.levy1.intensity * (w1 @ np.abs(dj.g1(xi[None, :], xs[None, :], z1[:, None])) ** p)
            worst = max(worst, float(np.max(fv / (1.0 + np.abs(xs) ** (p / m1)))))
            fv2 = np.abs(dj.f2(ts, xi, xs)) ** p + model.levy2.intensity * (
                w2q @ np.abs(dj.g2(ts[None, :], xi[None, :], xs[None, :], z2q[:, None])) ** p
            )
            worst = max(worst, float(np.max(fv2 / (1.0 + np.abs(xs) ** (p / m2)))))
        return worst

    entries.append(
        _ratio_check(
            "noise_coeff_growth",
            noise_growth_ratio(_CAL_RADIUS),
            noise_growth_ratio(_TEST_RADIUS),
            "|f|^p + nu-integral |g|^p <= C (1 + |state|^(p/m))",
        )
    )

    dper_f2 = float(np.max(np.abs(dj.f2(ts + model.fast.period, xi, x) - dj.f2(ts, xi, x))))
    dper_g2 = float(np.max(np.abs(dj.g2(ts + model.fast.period, xi, x, 0.7) - dj.g2(ts, xi, x, 0.7))))
    worst_per = max(dper_f2, dper_g2)
    entries.append(
        AuditEntry("noise_coeff_periodicity", worst_per <= 1e-9, 1e-9 - worst_per, model.fast.period, "f2 and g2 repeat after one period")
    )

    return AuditReport(tuple(entries))
