"""Q-Wiener increments and compensated Poisson jumps with replayable streams.

Randomness is organized around counter-based Philox streams keyed by
(master seed, path index, role, qualifier).  A stream is fully determined
by its key, so a noise path can be serialized as the key plus grid
metadata and replayed bit-identically by regeneration; nothing is ever
stored draw-by-draw.  Roles keep the four noise sources of one trajectory
independent of each other.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

__all__ = [
    "ROLE_SLOW_W",
    "ROLE_SLOW_N",
    "ROLE_FAST_W",
    "ROLE_FAST_N",
    "stream_for",
    "QWienerSpec",
    "LevyMeasureSpec",
    "JumpEvent",
    "JumpSeries",
    "NoisePath",
    "sample_wiener_increments",
    "sample_jump_events",
    "compensated_jump_increment",
]

ROLE_SLOW_W = "slow-W"
ROLE_SLOW_N = "slow-N"
ROLE_FAST_W = "fast-W"
ROLE_FAST_N = "fast-N"

_ROLE_CODES = {ROLE_SLOW_W: 1, ROLE_SLOW_N: 2, ROLE_FAST_W: 3, ROLE_FAST_N: 4}


def stream_for(seed: int, path_index: int, role: str, qualifier: int = 0) -> np.random.Generator:
    """Independent Philox stream for one (seed, path, role[, qualifier]) cell.

    The key is built structurally (no hashing of Python objects) so the
    same tuple reproduces the same stream on any platform.
    """
    if role not in _ROLE_CODES:
        raise ValueError(f"unknown stream role {role!r}")
    if not 0 <= path_index < 2**40:
        raise ValueError("path_index out of range")
    if not 0 <= qualifier < 2**16:
        raise ValueError("qualifier out of range")
    k0 = np.uint64(seed & 0xFFFFFFFFFFFFFFFF)
    k1 = np.uint64((path_index << 24) | (_ROLE_CODES[role] << 16) | qualifier)
    return np.random.Generator(np.random.Philox(key=np.array([k0, k1], dtype=np.uint64)))


@dataclass(frozen=True)
class QWienerSpec:
    """Diagonal covariance of a Q-Wiener process: mode k has intensity lambda_k.

    The default family is lambda_k = scale * k^(-decay) with decay > 1/2.
    ``rho`` and ``beta`` are the exponents entering the trace-type
    admissibility conditions; :meth:`tail_check` verifies both partial sums
    are numerically convergent (shrinking dyadic tail increments).
    """

    scale: float = 1.0
    decay: float = 1.0
    rho: float = 3.0
    beta: float = 0.75

    def __post_init__(self):
        if self.scale < 0.0:
            raise ValueError("scale must be >= 0")
        if self.scale > 0.0 and self.decay <= 0.5:
            raise ValueError("decay must exceed 1/2")
        if not self.rho > 2.0:
            raise ValueError("rho must exceed 2")
        if not self.beta > 0.0:
            raise ValueError("beta must be positive")

    def lambdas(self, n_modes: int) -> np.ndarray:
        k = np.arange(1, n_modes + 1, dtype=float)
        return self.scale * k ** (-self.decay)

    def tail_check(self, sup_mode_norm_sq: float = 2.0, block: int = 256) -> dict:
        """Ratio of consecutive dyadic tail increments for both admissibility sums.

        Ratios < 1 mean the partial sums are still contracting at the probed
        range, i.e. the spectrum is numerically trace-admissible.
        """
        k = np.arange(1, 4 * block + 1, dtype=float)
        lam = self.scale * k ** (-self.decay)
        alpha = (k * math.pi) ** 2
        out = {}
        for name, seq in (
            ("covariance_sum", lam**self.rho * sup_mode_norm_sq),
            ("regularity_sum", alpha ** (-self.beta) * sup_mode_norm_sq),
        ):
            t1 = float(np.sum(seq[block : 2 * block]))
            t2 = float(np.sum(seq[2 * block : 4 * block]))
            out[name] = t2 / t1 if t1 > 0.0 else 0.0
        return out

    def effective_exponent(self) -> float:
        """beta (rho - 2) / rho, the combined exponent the admissibility bound caps."""
        if math.isinf(self.rho):
            return self.beta
        return self.beta * (self.rho - 2.0) / self.rho


@dataclass(frozen=True)
class LevyMeasureSpec:
    """Finite-activity Levy measure: total intensity times a mark distribution.

    Built-in mark laws are ``uniform`` on [-width, width] and ``normal``
    with standard deviation ``width``.  Only finite activity is supported,
    which permits exact jump-time simulation.
    """

    intensity: float = 1.0
    mark_law: str = "uniform"
    width: float = 1.0

    def __post_init__(self):
        if self.intensity < 0.0:
            raise ValueError("intensity must be >= 0")
        if self.mark_law not in ("uniform", "normal"):
            raise ValueError(f"unknown mark law {self.mark_law!r}")
        if self.width <= 0.0:
            raise ValueError("width must be positive")

    def sample_marks(self, gen: np.random.Generator, n: int) -> np.ndarray:
        if self.mark_law == "uniform":
            return gen.uniform(-self.width, self.width, size=n)
        return gen.normal(0.0, self.width, size=n)

    def mark_cdf(self, z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        if self.mark_law == "uniform":
            return np.clip((z + self.width) / (2.0 * self.width), 0.0, 1.0)
        return 0.5 * (1.0 + np.vectorize(math.erf)(z / (self.width * math.sqrt(2.0))))

    def mark_mean(self) -> float:
        return 0.0  # both built-in laws are symmetric

    def abs_moment(self, p: int) -> float:
        """E |z|^p under the normalized mark law, p in {1, 2, 4}."""
        w = self.width
        if self.mark_law == "uniform":
            table = {1: w / 2.0, 2: w**2 / 3.0, 4: w**4 / 5.0}
        else:
            table = {1: w * math.sqrt(2.0 / math.pi), 2: w**2, 4: 3.0 * w**4}
        if p not in table:
            raise ValueError(f"no tabulated moment for p={p}")
        return table[p]

    def moment(self, p: int, absolute: bool = True) -> float:
        """nu-integral of |z|^p (or z^p) over the whole measure, intensity included."""
        if not absolute and p % 2 == 1:
            return 0.0
        return self.intensity * self.abs_moment(p)

    def quadrature(self, n: int = 64) -> tuple[np.ndarray, np.ndarray]:
        """Nodes and weights integrating z -> f(z) against the normalized mark law."""
        if self.mark_law == "uniform":
            x, w = np.polynomial.legendre.leggauss(n)
            return x * self.width, w / 2.0
        x, w = np.polynomial.hermite.hermgauss(n)
        return x * math.sqrt(2.0) * self.width, w / math.sqrt(math.pi)


@dataclass(frozen=True)
class JumpEvent:
    time: float
    mark: float


class JumpSeries:
    """Ordered jump events over a window, stored as parallel arrays."""

    __slots__ = ("times", "marks")

    def __init__(self, times: np.ndarray, marks: np.ndarray):
        self.times = np.asarray(times, dtype=float)
        self.marks = np.asarray(marks, dtype=float)
        if self.times.shape != self.marks.shape:
            raise ValueError("times and marks must have equal length")

    def __len__(self) -> int:
        return self.times.shape[0]

    def __getitem__(self, i: int) -> JumpEvent:
        return JumpEvent(float(self.times[i]), float(self.marks[i]))

    def __iter__(self) -> Iterator[JumpEvent]:
        for i in range(len(self)):
            yield self[i]

    def between(self, t0: float, t1: float) -> "JumpSeries":
        """Events with time in (t0, t1]."""
        lo = np.searchsorted(self.times, t0, side="right")
        hi = np.searchsorted(self.times, t1, side="right")
        return JumpSeries(self.times[lo:hi], self.marks[lo:hi])


def sample_wiener_increments(
    spec: QWienerSpec,
    dt: float,
    gen: np.random.Generator,
    n_modes: int,
    n_steps: int | None = None,
) -> np.ndarray:
    """Per-mode increments of the Q-Wiener process over steps of length dt.

    Mode k is Normal(0, lambda_k^2 dt), independent across modes and steps.
    Returns shape (n_modes,) or (n_steps, n_modes).
    """
    if dt < 0.0:
        raise ValueError("dt must be >= 0")
    lam = spec.lambdas(n_modes)
    shape = (n_modes,) if n_steps is None else (n_steps, n_modes)
    if dt == 0.0 or spec.scale == 0.0:
        return np.zeros(shape)
    return gen.standard_normal(shape) * (lam * math.sqrt(dt))


def sample_jump_events(
    levy: LevyMeasureSpec,
    window: tuple[float, float],
    intensity_scale: float,
    gen: np.random.Generator,
) -> JumpSeries:
    """Jump times and marks on a window at rate intensity * intensity_scale.

    The count is Poisson, times are uniform on the window (sorted), marks
    i.i.d. from the normalized mark law.
    """
    t0, t1 = window
    if t1 <= t0:
        raise ValueError(f"window must have positive length, got ({t0}, {t1})")
    if intensity_scale <= 0.0:
        raise ValueError("intensity_scale must be positive")
    lam = levy.intensity * intensity_scale * (t1 - t0)
    if lam == 0.0:
        return JumpSeries(np.empty(0), np.empty(0))
    n = int(gen.poisson(lam))
    times = np.sort(gen.uniform(t0, t1, size=n))
    marks = levy.sample_marks(gen, n)
    return JumpSeries(times, marks)


def compensated_jump_increment(
    g_values: np.ndarray,
    g_compensator: np.ndarray,
    dt: float,
) -> np.ndarray:
    """Compensated jump increment in nodal form.

    ``g_values`` holds one row of nodal jump amplitudes per event (possibly
    zero rows); ``g_compensator`` is the nodal field of the nu-integral of
    the amplitude, evaluated at the same state the events used.  ``dt`` is
    the window length times the intensity scale of the driving measure.
    """
    if dt < 0.0:
        raise ValueError("dt must be >= 0")
    comp = np.asarray(g_compensator, dtype=float)
    vals = np.asarray(g_values, dtype=float)
    if vals.size == 0:
        return -dt * comp
    if vals.ndim != 2 or vals.shape[1] != comp.shape[0]:
        raise ValueError(f"amplitude shape {vals.shape} does not match {comp.shape[0]} nodes")
    return vals.sum(axis=0) - dt * comp


@dataclass
class NoisePath:
    """Reproducible record of one noise realization for one equation side.

    Holds per-mode Wiener increments on a fixed grid plus the jump events of
    the window, all derived from (seed, path_index, qualifier) streams.  Two
    paths with the same key and grid are bit-identical, which is what lets a
    full simulation and its averaged counterpart consume the *same* slow
    noise.  ``intensity_scale`` is 1 on the slow clock and 1/eps on the fast
    clock.
    """

    seed: int
    path_index: int
    kind: str  # "slow" or "fast"
    t0: float
    t1: float
    dt: float
    n_modes: int
    q_spec: QWienerSpec
    levy_spec: LevyMeasureSpec
    intensity_scale: float = 1.0
    qualifier: int = 0
    _wiener: np.ndarray | None = field(default=None, repr=False, compare=False)
    _jumps: JumpSeries | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in ("slow", "fast"):
            raise ValueError(f"kind must be 'slow' or 'fast', got {self.kind!r}")
        if self.t1 <= self.t0:
            raise ValueError("empty time window")
        if self.dt <= 0.0:
            raise ValueError("dt must be positive")
        self.n_steps = int(round((self.t1 - self.t0) / self.dt))
        if abs(self.n_steps * self.dt - (self.t1 - self.t0)) > 1e-9 * (self.t1 - self.t0):
            raise ValueError("dt must divide the window length")

    def _roles(self) -> tuple[str, str]:
        return (ROLE_SLOW_W, ROLE_SLOW_N) if self.kind == "slow" else (ROLE_FAST_W, ROLE_FAST_N)

    def _ensure(self) -> None:
        if self._wiener is not None:
            return
        role_w, role_n = self._roles()
        gen_w = stream_for(self.seed, self.path_index, role_w, self.qualifier)
        self._wiener = sample_wiener_increments(self.q_spec, self.dt, gen_w, self.n_modes, self.n_steps)
        gen_n = stream_for(self.seed, self.path_index, role_n, self.qualifier)
        if self.levy_spec.intensity > 0.0:
            self._jumps = sample_jump_events(
                self.levy_spec, (self.t0, self.t1), self.intensity_scale, gen_n
            )
        else:
            self._jumps = JumpSeries(np.empty(0), np.empty(0))

    def wiener_increment(self, step: int) -> np.ndarray:
        self._ensure()
        return self._wiener[step]

    def wiener_increments(self) -> np.ndarray:
        self._ensure()
        return self._wiener

    def jumps(self) -> JumpSeries:
        self._ensure()
        return self._jumps

    def jumps_between(self, ta: float, tb: float) -> JumpSeries:
        return self.jumps().between(ta, tb)

    def fingerprint(self) -> str:
        """SHA-256 over the realized draws plus the grid metadata."""
        self._ensure()
        h = hashlib.sha256()
        h.update(self.to_record().encode())
        h.update(np.ascontiguousarray(self._wiener).tobytes())
        h.update(np.ascontiguousarray(self._jumps.times).tobytes())
        h.update(np.ascontiguousarray(self._jumps.marks).tobytes())
        return h.hexdigest()

    def to_record(self) -> str:
        """Portable text record; replay is by regeneration from the key."""
        q, l = self.q_spec, self.levy_spec
        parts = [
            f"seed={self.seed}",
            f"path={self.path_index}",
            f"kind={self.kind}",
            f"qualifier={self.qualifier}",
            f"t0={self.t0!r}",
            f"t1={self.t1!r}",
            f"dt={self.dt!r}",
            f"n_modes={self.n_modes}",
            f"q=({q.scale!r},{q.decay!r},{q.rho!r},{q.beta!r})",
            f"levy=({l.intensity!r},{l.mark_law},{l.width!r})",
            f"scale={self.intensity_scale!r}",
        ]
        return "noisepath|" + "|".join(parts)

    @classmethod
    def from_record(cls, record: str) -> "NoisePath":
        head, *parts = record.strip().split("|")
        if head != "noisepath":
            raise ValueError("not a noise-path record")
        kv = dict(p.split("=", 1) for p in parts)
        q = tuple(float(x) for x in kv["q"].strip("()").split(","))
        lev = kv["levy"].strip("()").split(",")
        return cls(
            seed=int(kv["seed"]),
            path_index=int(kv["path"]),
            kind=kv["kind"],
            t0=float(kv["t0"]),
            t1=float(kv["t1"]),
            dt=float(kv["dt"]),
            n_modes=int(kv["n_modes"]),
            q_spec=QWienerSpec(scale=q[0], decay=q[1], rho=q[2], beta=q[3]),
            levy_spec=LevyMeasureSpec(intensity=float(lev[0]), mark_law=lev[1], width=float(lev[2])),
            intensity_scale=float(kv["scale"]),
            qualifier=int(kv["qualifier"]),
        )
