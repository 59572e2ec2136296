"""Levitated-nanosphere phonon laser simulator.

Thin python surface over the C++ core: closed-loop Langevin engine, the
measurement-feedback DSP chain, the rate-equation reference model, and the
analysis operations (phonon statistics, lock-in quadratures, Welch PSD,
threshold detection).
"""

from ._core import (  # noqa: F401
    BlowupError,
    DetectorConfig,
    EngineConfig,
    ExperimentKind,
    ExperimentSpec,
    IQSeries,
    LinearBranchConfig,
    NonlinearBranchConfig,
    OscillatorState,
    PhaseCalibration,
    PhononDistribution,
    PsdEstimate,
    RadialStats,
    RateParams,
    ThresholdResult,
    TrajectoryRecord,
    TrapConfig,
    __version__,
    calibrate_linear_rate,
    calibrate_phases,
    default_mass_from_diameter,
    detect_threshold,
    dump_config,
    g2_from_params,
    load_config,
    lock_in,
    parse_config,
    phonon_histogram,
    phonon_number,
    radial_statistics,
    run_closed_loop,
    run_experiment,
    sde_trajectory,
    steady_state_distribution,
    step_oscillator,
    suggest_n_max,
    thermal_phonon_number,
    welch_psd,
)
