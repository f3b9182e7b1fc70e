"""Plain-text sectioned configuration for batch experiments.

Format: ``[section]`` headers, ``key = value`` lines, ``#`` comments.
Values are scalars or comma-separated lists; every key is declared in the
schema below with a type and default, and unknown sections or keys are
rejected with their line number.  ``canonical_text`` renders a config back
to text such that parsing it reproduces the same object, and its SHA-256 is
the config fingerprint recorded in run manifests.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from .basis import build_basis, make_profile, field_from_values
from .coefficients import (
    ModelSpec,
    compile_expression,
    make_diffusion_jump,
    make_fast_reaction,
    make_slow_reaction,
)
from .harness import SweepPlan
from .integrator import SolverConfig
from .noise import LevyMeasureSpec, QWienerSpec

__all__ = ["ConfigError", "RunConfig", "parse_config", "canonical_text", "config_fingerprint"]


class ConfigError(ValueError):
    """Carries (line, message) pairs for every problem found."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(f"line {ln}: {msg}" for ln, msg in self.errors))


# (section, key) -> (type, default); types: int, float, opt_float, bool, str, float_list
_SCHEMA: dict[str, dict[str, tuple[str, object]]] = {
    "model": {
        "label": ("str", "fhn-cubic"),
        "slow_reaction": ("str", "fhn"),
        "slow_m1": ("float", 3.0),
        "slow_kappa": ("float", 2.0),
        "fast_reaction": ("str", "cubic_decay"),
        "fast_a": ("float", 1.0),
        "fast_c": ("float", 0.5),
        "fast_m2": ("float", 3.0),
        "f1": ("str", "tanh"),
        "f1_scale": ("float", 0.1),
        "f2": ("str", "tanh"),
        "f2_scale": ("float", 0.2),
        "g1": ("str", "tanh"),
        "g1_scale": ("float", 0.1),
        "g2": ("str", "tanh"),
        "g2_scale": ("float", 0.1),
        "gamma_base": ("float", 1.0),
        "gamma_amp": ("float", 0.2),
        "period": ("float", 0.5),
        "l_amp": ("float", 0.1),
        "init_x": ("str", "0.5*sin(pi*xi)"),
        "init_y": ("str", "0.25*sin(pi*xi)"),
    },
    "basis": {
        "boundary": ("str", "dirichlet"),
        "modes": ("int", 32),
        "nodes": ("int", 64),
    },
    "solver": {
        "dt": ("float", 1e-3),
        "h": ("float", 5e-4),
        "alpha": ("float", 1.0),
        "epsilon": ("float", 0.1),
        "t_end": ("float", 0.5),
        "save_stride": ("int", 1),
        "stop_radius": ("opt_float", 25.0),
        "cutoff_radius": ("opt_float", None),
    },
    "noise": {
        "q1_scale": ("float", 1.0),
        "q1_decay": ("float", 1.0),
        "q1_rho": ("float", 3.0),
        "q1_beta": ("float", 0.75),
        "q2_scale": ("float", 1.0),
        "q2_decay": ("float", 1.0),
        "q2_rho": ("float", 3.0),
        "q2_beta": ("float", 0.75),
        "levy1_intensity": ("float", 2.0),
        "levy1_law": ("str", "uniform"),
        "levy1_width": ("float", 1.0),
        "levy2_intensity": ("float", 2.0),
        "levy2_law": ("str", "uniform"),
        "levy2_width": ("float", 1.0),
    },
    "sweep": {
        "eps": ("float_list", [0.2, 0.1, 0.05, 0.025]),
        "paths": ("int", 32),
        "p": ("float_list", [2.0]),
        "kappa": ("float", 0.25),
        "micro_step_scale": ("opt_float", 0.008),
        "drift": ("str", "oracle"),
    },
    "averaging": {
        "t_burn": ("float", 1.0),
        "t_avg": ("float", 2.0),
        "n_traj": ("int", 16),
        "cache_quantum": ("float", 0.0),
        "cache_reuse_tol": ("float", 0.0),
        "max_estimates": ("int", 4096),
    },
    "mixing": {
        "observable": ("str", "mode1"),
        "lags": ("float_list", [0.02, 0.04, 0.06, 0.08, 0.12, 0.16, 0.2, 0.24, 0.28, 0.32]),
        "replicas": ("int", 64),
        "horizon": ("float", 1.0),
        "longrun_horizon": ("float", 8.0),
    },
    "probe": {
        "offsets": ("float_list", [0.004, 0.008, 0.016, 0.032, 0.064]),
        "p": ("float", 2.0),
        "paths": ("int", 64),
        "t0": ("float", 0.2),
    },
    "output": {
        "dir": ("str", "out"),
        "trajectory_view": ("str", "spectral"),
    },
    "run": {
        "seed": ("int", 1234),
    },
}

_DRIFT_CHOICES = ("oracle", "estimator", "identity")


def _parse_scalar(kind: str, raw: str):
    if kind == "int":
        return int(raw)
    if kind == "float":
        return float(raw)
    if kind == "opt_float":
        return None if raw.lower() in ("none", "off") else float(raw)
    if kind == "bool":
        if raw.lower() in ("true", "yes", "on", "1"):
            return True
        if raw.lower() in ("false", "no", "off", "0"):
            return False
        raise ValueError(f"not a boolean: {raw!r}")
    if kind == "str":
        return raw
    if kind == "float_list":
        return [float(p) for p in raw.split(",") if p.strip() != ""]
    raise AssertionError(kind)


@dataclass(frozen=True)
class RunConfig:
    """Validated configuration; ``values[section][key]`` holds typed entries."""

    values: dict

    def __getitem__(self, section: str) -> dict:
        return self.values[section]

    def get(self, section: str, key: str):
        return self.values[section][key]

    # builders -------------------------------------------------------------

    def build_basis(self):
        return build_basis(self.get("basis", "boundary"), self.get("basis", "modes"), self.get("basis", "nodes"))

    def build_model(self) -> ModelSpec:
        m = self.values["model"]
        n = self.values["noise"]
        basis = self.build_basis()
        profile = make_profile(m["gamma_base"], m["gamma_amp"], m["period"], m["l_amp"])
        slow = make_slow_reaction(m["slow_reaction"], m1=m["slow_m1"], kappa=m["slow_kappa"])
        fast = make_fast_reaction(m["fast_reaction"], a=m["fast_a"], c=m["fast_c"], period=m["period"], m2=m["fast_m2"])
        diffjump = make_diffusion_jump(
            f1=(m["f1"], m["f1_scale"]),
            f2=(m["f2"], m["f2_scale"]),
            g1=(m["g1"], m["g1_scale"]),
            g2=(m["g2"], m["g2_scale"]),
        )
        return ModelSpec(
            name=m["label"],
            basis=basis,
            profile=profile,
            slow=slow,
            fast=fast,
            diffjump=diffjump,
            q1=QWienerSpec(n["q1_scale"], n["q1_decay"], n["q1_rho"], n["q1_beta"]),
            q2=QWienerSpec(n["q2_scale"], n["q2_decay"], n["q2_rho"], n["q2_beta"]),
            levy1=LevyMeasureSpec(n["levy1_intensity"], n["levy1_law"], n["levy1_width"]),
            levy2=LevyMeasureSpec(n["levy2_intensity"], n["levy2_law"], n["levy2_width"]),
        )

    def build_solver(self) -> SolverConfig:
        s = self.values["solver"]
        return SolverConfig(
            dt=s["dt"], h=s["h"], alpha=s["alpha"], eps=s["epsilon"], t_end=s["t_end"],
            save_stride=s["save_stride"], cutoff_radius=s["cutoff_radius"], stop_radius=s["stop_radius"],
        )

    def build_plan(self) -> SweepPlan:
        s = self.values["sweep"]
        return SweepPlan(
            eps_list=tuple(s["eps"]), n_paths=s["paths"], p_list=tuple(s["p"]),
            kappa=s["kappa"], seed=self.get("run", "seed"), micro_step_scale=s["micro_step_scale"],
        )

    def initial_fields(self, model: ModelSpec):
        nodes = model.basis.nodes
        fields = []
        for key in ("init_x", "init_y"):
            fn = compile_expression(self.get("model", key), ("xi",))
            vals = np.asarray(fn(xi=nodes), dtype=float) + np.zeros_like(nodes)
            fields.append(field_from_values(model.basis, vals))
        return tuple(fields)


def parse_config(text: str) -> RunConfig:
    """Parse and validate; raises ConfigError listing every problem with its line."""
    values = {sec: {k: (list(d) if isinstance(d, list) else d) for k, (_, d) in keys.items()} for sec, keys in _SCHEMA.items()}
    errors: list[tuple[int, str]] = []
    section = None
    seen: set[tuple[str, str]] = set()
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            name = line[1:-1].strip()
            if name not in _SCHEMA:
                errors.append((ln, f"unknown section [{name}]"))
                section = None
            else:
                section = name
            continue
        if "=" not in line:
            errors.append((ln, f"expected 'key = value', got {line!r}"))
            continue
        if section is None:
            errors.append((ln, "key outside any known section"))
            continue
        key, _, raw_val = line.partition("=")
        key = key.strip()
        raw_val = raw_val.strip()
        if key not in _SCHEMA[section]:
            errors.append((ln, f"unknown key {section}.{key}"))
            continue
        if (section, key) in seen:
            errors.append((ln, f"duplicate key {section}.{key}"))
            continue
        seen.add((section, key))
        kind = _SCHEMA[section][key][0]
        try:
            values[section][key] = _parse_scalar(kind, raw_val)
        except ValueError:
            errors.append((ln, f"{section}.{key}: cannot parse {raw_val!r} as {kind}"))

    if errors:
        raise ConfigError(errors)
    _cross_validate(values, errors)
    if errors:
        raise ConfigError(errors)
    return RunConfig(values)


def _cross_validate(values: dict, errors: list) -> None:
    s = values["solver"]
    if not 0.0 < s["epsilon"] <= 1.0:
        errors.append((0, f"solver.epsilon must lie in (0, 1], got {s['epsilon']}"))
    if not 0.0 < s["h"] <= s["dt"]:
        errors.append((0, f"solver.h must satisfy 0 < h <= dt, got h={s['h']}, dt={s['dt']}"))
    b = values["basis"]
    if b["nodes"] < b["modes"]:
        errors.append((0, f"basis.nodes={b['nodes']} must be >= basis.modes={b['modes']}"))
    if b["boundary"] not in ("dirichlet", "neumann"):
        errors.append((0, f"basis.boundary must be dirichlet or neumann, got {b['boundary']!r}"))
    m = values["model"]
    if abs(m["gamma_amp"]) >= m["gamma_base"]:
        errors.append((0, "model.gamma_amp must be smaller in magnitude than model.gamma_base"))
    if m["fast_reaction"] in ("cubic_decay", "linear") and abs(m["fast_c"]) > m["fast_a"]:
        errors.append((0, "model.fast_c must not exceed model.fast_a in magnitude"))
    sw = values["sweep"]
    eps = sw["eps"]
    if any(not 0.0 < e <= 1.0 for e in eps):
        errors.append((0, f"sweep.eps values must lie in (0, 1], got {eps}"))
    if any(a <= b2 for a, b2 in zip(eps, eps[1:])):
        errors.append((0, "sweep.eps must be strictly decreasing"))
    if sw["drift"] not in _DRIFT_CHOICES:
        errors.append((0, f"sweep.drift must be one of {_DRIFT_CHOICES}, got {sw['drift']!r}"))
    if values["output"]["trajectory_view"] not in ("spectral", "nodal"):
        errors.append((0, "output.trajectory_view must be 'spectral' or 'nodal'"))
    for sec, key in (("model", "init_x"), ("model", "init_y")):
        try:
            compile_expression(values[sec][key], ("xi",))
        except ValueError as exc:
            errors.append((0, f"{sec}.{key}: {exc}"))
    for key in ("slow_reaction",):
        name = values["model"][key]
        if name.startswith("expr:"):
            try:
                compile_expression(name[5:], ("xi", "x", "y"))
            except ValueError as exc:
                errors.append((0, f"model.{key}: {exc}"))
    name = values["model"]["fast_reaction"]
    if name.startswith("expr:"):
        try:
            compile_expression(name[5:], ("t", "xi", "x", "y"))
        except ValueError as exc:
            errors.append((0, f"model.fast_reaction: {exc}"))


def _format_value(kind: str, value) -> str:
    if kind == "float_list":
        return ",".join(repr(float(v)) for v in value)
    if kind == "opt_float":
        return "none" if value is None else repr(float(value))
    if kind == "float":
        return repr(float(value))
    if kind == "bool":
        return "true" if value else "false"
    return str(value)


def canonical_text(cfg: RunConfig) -> str:
    """Stable rendering; parse(canonical_text(cfg)) == cfg."""
    lines = []
    for sec in _SCHEMA:
        lines.append(f"[{sec}]")
        for key, (kind, _) in _SCHEMA[sec].items():
            lines.append(f"{key} = {_format_value(kind, cfg.values[sec][key])}")
        lines.append("")
    return "\n".join(lines)


def config_fingerprint(cfg: RunConfig) -> str:
    return hashlib.sha256(canonical_text(cfg).encode()).hexdigest()
