"""Eigenbasis of the diffusion operators on (0, 1) and spectral field algebra.

Everything downstream works with functions represented by their first N
eigenmode coefficients.  The basis object bundles the eigenvalues of the two
operator families, the collocation nodes, and the dense transform matrices
between nodal and spectral views.  All objects are immutable after
construction and every operation here is pure, so unrestricted concurrent
use is safe.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = [
    "BoundaryCondition",
    "BasisSpec",
    "SpectralField",
    "TimeProfile",
    "build_basis",
    "make_profile",
    "transform",
    "apply_semigroup",
    "gamma_integral",
    "apply_evolution",
    "apply_transport",
    "spectral_derivative_values",
    "fractional_power_norm",
]


class BoundaryCondition(enum.Enum):
    DIRICHLET = "dirichlet"
    NEUMANN = "neumann"


class TransformDirection(enum.Enum):
    TO_NODAL = "to_nodal"
    TO_SPECTRAL = "to_spectral"


@dataclass(frozen=True)
class BasisSpec:
    """Retained eigenpairs and dense nodal<->spectral transforms.

    ``synthesis`` maps coefficients to values at the nodes; ``analysis`` is
    its pseudo-inverse (least-squares projection).  ``deriv_synthesis`` maps
    coefficients to the values of the spatial derivative at the nodes.
    ``eigs_1``/``eigs_2`` are the (positive) eigenvalues of the two operator
    families; both are the Laplacian spectrum in this 1-D setting but are
    kept separate so consumers never conflate the two operators.
    """

    bc: BoundaryCondition
    n_modes: int
    nodes: np.ndarray
    eigs_1: np.ndarray
    eigs_2: np.ndarray
    synthesis: np.ndarray
    analysis: np.ndarray
    deriv_synthesis: np.ndarray

    def eigenvalues(self, family: int) -> np.ndarray:
        if family == 1:
            return self.eigs_1
        if family == 2:
            return self.eigs_2
        raise ValueError(f"operator family must be 1 or 2, got {family}")

    @property
    def n_nodes(self) -> int:
        return self.nodes.shape[0]


def build_basis(
    bc: BoundaryCondition | str,
    n_modes: int,
    node_count: int | None = None,
) -> BasisSpec:
    """Construct the eigenbasis on (0, 1) with ``n_modes`` retained modes.

    Dirichlet modes are sqrt(2) sin(k pi xi) with eigenvalues (k pi)^2.
    Neumann keeps sqrt(2) cos(k pi xi) for k >= 1; the constant mode is
    dropped so the retained spectrum stays bounded away from zero, which
    every estimate downstream relies on.

    ``node_count`` defaults to 2 * n_modes (the de-aliasing rule for the
    cubic built-in reactions).  Fewer nodes than modes would make the
    nodal -> spectral projection underdetermined.
    """
    bc = BoundaryCondition(bc) if not isinstance(bc, BoundaryCondition) else bc
    if n_modes < 1:
        raise ValueError(f"n_modes must be >= 1, got {n_modes}")
    if node_count is None:
        node_count = 2 * n_modes
    if node_count < n_modes:
        raise ValueError(
            f"node_count={node_count} < n_modes={n_modes}: transform would be underdetermined"
        )

    k = np.arange(1, n_modes + 1, dtype=float)
    eigs = (k * math.pi) ** 2
    if bc is BoundaryCondition.DIRICHLET:
        nodes = np.arange(1, node_count + 1, dtype=float) / (node_count + 1)
        synthesis = math.sqrt(2.0) * np.sin(np.outer(nodes, k) * math.pi)
        deriv = math.sqrt(2.0) * (k * math.pi) * np.cos(np.outer(nodes, k) * math.pi)
    else:
        nodes = (np.arange(node_count, dtype=float) + 0.5) / node_count
        synthesis = math.sqrt(2.0) * np.cos(np.outer(nodes, k) * math.pi)
        deriv = -math.sqrt(2.0) * (k * math.pi) * np.sin(np.outer(nodes, k) * math.pi)
    analysis = np.linalg.pinv(synthesis)

    for arr in (nodes, eigs, synthesis, analysis, deriv):
        arr.setflags(write=False)
    return BasisSpec(
        bc=bc,
        n_modes=n_modes,
        nodes=nodes,
        eigs_1=eigs,
        eigs_2=eigs.copy(),
        synthesis=synthesis,
        analysis=analysis,
        deriv_synthesis=deriv,
    )


class SpectralField:
    """A function on (0, 1) held as coefficients on the retained modes.

    Carries a lazily-computed nodal view; the sup-norm is taken over the
    nodal values.  Instances are treated as immutable: arithmetic returns
    new fields and the arrays are never written in place.
    """

    __slots__ = ("basis", "coeffs", "_values")

    def __init__(self, basis: BasisSpec, coeffs, values=None):
        self.basis = basis
        self.coeffs = np.asarray(coeffs, dtype=float)
        self._values = values

    @property
    def values(self) -> np.ndarray:
        if self._values is None:
            self._values = self.basis.synthesis @ self.coeffs
        return self._values

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    def l2_norm(self) -> float:
        """L2(0,1) norm; the modes are orthonormal so this is the coefficient norm."""
        return float(np.linalg.norm(self.coeffs))

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.coeffs)))

    def __add__(self, other: "SpectralField") -> "SpectralField":
        if other.basis is not self.basis:
            raise ValueError("fields live on different bases")
        return SpectralField(self.basis, self.coeffs + other.coeffs)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        if other.basis is not self.basis:
            raise ValueError("fields live on different bases")
        return SpectralField(self.basis, self.coeffs - other.coeffs)

    def __mul__(self, scalar: float) -> "SpectralField":
        return SpectralField(self.basis, self.coeffs * float(scalar))

    __rmul__ = __mul__

    def __repr__(self) -> str:
        return f"SpectralField(n={self.basis.n_modes}, sup={self.sup_norm():.4g})"


def field_from_values(basis: BasisSpec, values) -> SpectralField:
    """Project nodal values onto the retained modes (least squares)."""
    values = np.asarray(values, dtype=float)
    if values.shape != (basis.n_nodes,):
        raise ValueError(f"expected {basis.n_nodes} nodal values, got shape {values.shape}")
    return SpectralField(basis, basis.analysis @ values)


def field_from_function(basis: BasisSpec, fn: Callable[[np.ndarray], np.ndarray]) -> SpectralField:
    return field_from_values(basis, np.asarray(fn(basis.nodes), dtype=float) + np.zeros_like(basis.nodes))


def zero_field(basis: BasisSpec) -> SpectralField:
    return SpectralField(basis, np.zeros(basis.n_modes))


def transform(field: SpectralField, direction: TransformDirection | str) -> SpectralField:
    """Realize one leg of the nodal<->spectral pair.

    ``to_nodal`` returns the same field with its nodal cache materialized;
    ``to_spectral`` re-projects the current nodal values.  The two are
    mutual inverses on the span of the retained modes.
    """
    direction = TransformDirection(direction) if not isinstance(direction, TransformDirection) else direction
    if not field.is_finite():
        raise ValueError("non-finite field")
    if direction is TransformDirection.TO_NODAL:
        _ = field.values
        return field
    return field_from_values(field.basis, field.values)


@dataclass(frozen=True)
class TimeProfile:
    """Time dependence of the fast operator: diffusivity gamma and transport l.

    ``gamma`` is periodic with the given period and pinned inside
    [gamma_lower, gamma_upper]; ``transport`` evaluates l(t, xi) on an array
    of nodes.  Both share the same period.
    """

    gamma: Callable[[float], float]
    gamma_lower: float
    gamma_upper: float
    period: float
    transport: Callable[[float, np.ndarray], np.ndarray]

    def __post_init__(self):
        if not (0.0 < self.gamma_lower <= self.gamma_upper):
            raise ValueError("need 0 < gamma_lower <= gamma_upper")
        if self.period <= 0.0:
            raise ValueError("period must be positive")
        ts = np.linspace(0.0, self.period, 257)
        vals = np.array([self.gamma(float(t)) for t in ts])
        tol = 1e-9 * (1.0 + self.gamma_upper)
        if np.any(vals < self.gamma_lower - tol) or np.any(vals > self.gamma_upper + tol):
            raise ValueError("gamma leaves its declared bounds on the sampled period")

    def gamma_mean(self) -> float:
        """Average of gamma over one period (composite Simpson, 1024 panels)."""
        return gamma_integral(self, 0.0, self.period) / self.period


def make_profile(
    gamma_base: float = 1.0,
    gamma_amp: float = 0.0,
    period: float = 1.0,
    l_amp: float = 0.0,
) -> TimeProfile:
    """Built-in profile: gamma = base + amp sin(2 pi t / P), l = amp cos(2 pi t / P) sin(pi xi)."""
    if abs(gamma_amp) >= gamma_base:
        raise ValueError("need |gamma_amp| < gamma_base so that gamma stays positive")
    omega = 2.0 * math.pi / period

    def gamma(t: float) -> float:
        return gamma_base + gamma_amp * math.sin(omega * t)

    def transport(t: float, xi: np.ndarray) -> np.ndarray:
        if l_amp == 0.0:
            return np.zeros_like(xi)
        return l_amp * math.cos(omega * t) * np.sin(math.pi * xi)

    return TimeProfile(
        gamma=gamma,
        gamma_lower=gamma_base - abs(gamma_amp),
        gamma_upper=gamma_base + abs(gamma_amp),
        period=period,
        transport=transport,
    )


def _simpson(f, a, fa, b, fb):
    m = 0.5 * (a + b)
    fm = f(m)
    return m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb)


def _adaptive_simpson(f, a, fa, b, fb, m, fm, whole, tol, depth):
    lm, flm, left = _simpson(f, a, fa, m, fm)
    rm, frm, right = _simpson(f, m, fm, b, fb)
    if depth <= 0 or abs(left + right - whole) <= 15.0 * tol:
        return left + right + (left + right - whole) / 15.0
    return _adaptive_simpson(f, a, fa, m, fm, lm, flm, left, tol / 2.0, depth - 1) + _adaptive_simpson(
        f, m, fm, b, fb, rm, frm, right, tol / 2.0, depth - 1
    )


def gamma_integral(profile: TimeProfile, s: float, t: float, rtol: float = 1e-10) -> float:
    """Integral of gamma over [s, t] by adaptive Simpson quadrature.

    The result always lies in [gamma_lower (t-s), gamma_upper (t-s)].
    """
    if s > t:
        raise ValueError(f"need s <= t, got s={s}, t={t}")
    if s == t:
        return 0.0
    f = profile.gamma
    fa, fb = f(s), f(t)
    m, fm, whole = _simpson(f, s, fa, t, fb)
    # gamma is positive, so a relative tolerance anchored at the lower bound is safe
    tol = rtol * profile.gamma_lower * (t - s)
    return _adaptive_simpson(f, s, fa, t, fb, m, fm, whole, tol, 48)


def apply_semigroup(field: SpectralField, operator_family: int, t: float) -> SpectralField:
    """Heat semigroup of operator family 1 or 2: mode k is damped by exp(-alpha_k t)."""
    if t < 0.0:
        raise ValueError(f"semigroup time must be >= 0, got {t}")
    if t == 0.0:
        return field
    eigs = field.basis.eigenvalues(operator_family)
    return SpectralField(field.basis, field.coeffs * np.exp(-eigs * t))


def apply_evolution(
    field: SpectralField,
    profile: TimeProfile,
    s: float,
    t: float,
    alpha: float,
    eps: float,
) -> SpectralField:
    """Two-parameter evolution factor of the damped fast operator.

    Mode k is multiplied by exp(-(gamma(t,s) alpha_{2,k} + alpha (t-s)) / eps)
    where gamma(t,s) integrates the diffusivity profile.  Composition over a
    split point matches direct evaluation because the exponents add.
    """
    if eps <= 0.0:
        raise ValueError(f"eps must be positive, got {eps}")
    if s > t:
        raise ValueError(f"need s <= t, got s={s}, t={t}")
    g = gamma_integral(profile, s, t)
    eigs = field.basis.eigs_2
    factor = np.exp(-(g * eigs + alpha * (t - s)) / eps)
    return SpectralField(field.basis, field.coeffs * factor)


def spectral_derivative_values(field: SpectralField) -> np.ndarray:
    """Nodal values of the spatial derivative, computed from the mode coefficients."""
    return field.basis.deriv_synthesis @ field.coeffs


def apply_transport(field: SpectralField, profile: TimeProfile, t: float) -> SpectralField:
    """First-order term l(t, xi) d/dxi applied nodally, then re-projected."""
    if not field.is_finite():
        raise ValueError("non-finite field")
    lvals = profile.transport(t, field.basis.nodes)
    return field_from_values(field.basis, lvals * spectral_derivative_values(field))


def fractional_power_norm(field: SpectralField, theta: float) -> float:
    """Sup-norm of the field whose coefficients are scaled by alpha_{1,k}^theta."""
    if not 0.0 <= theta <= 1.0:
        raise ValueError(f"theta must lie in [0, 1], got {theta}")
    if theta == 0.0:
        return field.sup_norm()
    scaled = SpectralField(field.basis, field.coeffs * field.basis.eigs_1**theta)
    return scaled.sup_norm()
