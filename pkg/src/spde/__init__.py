"""Spectral-Galerkin simulation of two-time-scale stochastic reaction-diffusion
equations with Q-Wiener and compensated Poisson noise, plus the machinery to
construct the averaged slow equation by ergodic time-averaging and to measure
the strong error between the full and averaged dynamics across a range of
scale separations."""

__version__ = "0.1.0"

from .basis import (
    BasisSpec,
    BoundaryCondition,
    SpectralField,
    TimeProfile,
    apply_evolution,
    apply_semigroup,
    apply_transport,
    build_basis,
    field_from_values,
    field_from_function,
    fractional_power_norm,
    gamma_integral,
    make_profile,
    transform,
    zero_field,
)
from .noise import (
    JumpEvent,
    JumpSeries,
    LevyMeasureSpec,
    NoisePath,
    QWienerSpec,
    compensated_jump_increment,
    sample_jump_events,
    sample_wiener_increments,
    stream_for,
)
from .coefficients import (
    AuditReport,
    DiffusionJumpSpec,
    FastReactionSpec,
    ModelSpec,
    SlowReactionSpec,
    audit_assumptions,
    cutoff_reaction,
    eval_diffusion_jump,
    eval_fast_reaction,
    eval_slow_reaction,
    make_diffusion_jump,
    make_fast_reaction,
    make_slow_reaction,
)
from .integrator import (
    CoupledNoise,
    DivergenceError,
    KhasminskiiResult,
    SlowFastState,
    SolverConfig,
    make_noise_pair,
    simulate_coupled,
    simulate_khasminskii,
    step_fast,
    step_slow,
)
from .averaging import (
    AnalyticDrift,
    AveragedDriftEstimate,
    ContractionReport,
    EstimatedDrift,
    EstimationError,
    FrozenFastProblem,
    LinearFastMeanDrift,
    MixingReport,
    YIndependentDrift,
    contraction_test,
    estimate_averaged_drift,
    estimate_mixing_rate,
    simulate_averaged,
    simulate_frozen_fast,
    stationarity_check,
)
from .harness import (
    ErrorReport,
    ProbeReport,
    SweepError,
    SweepPlan,
    fit_convergence_rate,
    khasminskii_trend,
    khasminskii_window,
    moment_audit,
    regularity_probe,
    run_epsilon_sweep,
)
from .config import ConfigError, RunConfig, canonical_text, config_fingerprint, parse_config
