"""Timing-offset and cascaded-channel estimation for multi-surface reflected
links, with downstream cooperative reflection design."""
from .channel import ChannelSet, MmWaveParams, cascade, gen_mmwave, gen_rayleigh
from .config import PulseConfig, SystemConfig
from .crlb import CrlbResult, crlb, crlb_from_fim, fim
from .design import (
    DesignInputs,
    DesignProblem,
    DesignResult,
    build_problem,
    design_accelerated,
    design_mm,
    design_perfect,
    design_phase_aligned,
    mmse_equalizer,
    mse_compact,
    mse_direct,
    random_phases,
    second_moment_root,
    white_noise_cov,
)
from .errors import FailureRateError, SingularSystemError
from .estimator import (
    EstimationResult,
    TrainingPattern,
    gen_training,
    ls_channel,
    mle_alternating,
    mle_common_offset,
    observation_matrix,
    residual_cost,
    simulate_training,
)
from .harness import (
    ExperimentSpec,
    SweepRow,
    format_sweep_rows,
    format_trace,
    run_async_impact,
    run_convergence,
    run_crlb_sweep,
    run_design_sweep,
    run_estimation_sweep,
)
from .pulse import (
    matched_filter_taps,
    pulse_autocorr,
    rrc_impulse,
    rrc_impulse_deriv,
    steering_matrix,
    steering_matrix_deriv,
    window_matrix,
)

__all__ = [
    "ChannelSet",
    "CrlbResult",
    "DesignInputs",
    "DesignProblem",
    "DesignResult",
    "EstimationResult",
    "ExperimentSpec",
    "FailureRateError",
    "MmWaveParams",
    "PulseConfig",
    "SingularSystemError",
    "SweepRow",
    "SystemConfig",
    "TrainingPattern",
    "build_problem",
    "cascade",
    "crlb",
    "crlb_from_fim",
    "design_accelerated",
    "design_mm",
    "design_perfect",
    "design_phase_aligned",
    "fim",
    "format_sweep_rows",
    "format_trace",
    "gen_mmwave",
    "gen_rayleigh",
    "gen_training",
    "ls_channel",
    "matched_filter_taps",
    "mle_alternating",
    "mle_common_offset",
    "mmse_equalizer",
    "mse_compact",
    "mse_direct",
    "observation_matrix",
    "pulse_autocorr",
    "random_phases",
    "residual_cost",
    "rrc_impulse",
    "rrc_impulse_deriv",
    "run_async_impact",
    "run_convergence",
    "run_crlb_sweep",
    "run_design_sweep",
    "run_estimation_sweep",
    "second_moment_root",
    "simulate_training",
    "steering_matrix",
    "steering_matrix_deriv",
    "white_noise_cov",
    "window_matrix",
]
