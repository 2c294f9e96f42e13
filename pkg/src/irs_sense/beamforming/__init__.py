"""Reflection-pattern and transmit-covariance designs."""

from .design import (
    AUTO,
    BACKENDS,
    COORDINATE_ASCENT,
    CRB_OBJECTIVE,
    SDR_SCA,
    SNR_OBJECTIVE,
    BeamformingResult,
    OptimizerOptions,
    maximize_snr,
    minimize_crb,
    optimize_pattern,
    r_step,
    reflective_only_design,
    transmit_only_design,
)
from .objectives import QuadObjective, crb_pattern_objective, isotropic_crb_objective, snr_objective
from .patterns import (
    ALIGN_COLUMN,
    DERIVATIVE_ALIGN,
    IDENTITY,
    RANDOM_PHASES,
    SPLIT_ALIGN,
    appendix_aligned_pattern,
    benchmark_pattern,
    los_optimal_phases,
)
from .sdr import SdrScaResult, relaxation_bound, sdr_sca

__all__ = [
    "AUTO", "BACKENDS", "COORDINATE_ASCENT", "CRB_OBJECTIVE", "SDR_SCA", "SNR_OBJECTIVE",
    "BeamformingResult", "OptimizerOptions", "maximize_snr", "minimize_crb", "optimize_pattern",
    "r_step", "reflective_only_design", "transmit_only_design",
    "QuadObjective", "crb_pattern_objective", "isotropic_crb_objective", "snr_objective",
    "ALIGN_COLUMN", "DERIVATIVE_ALIGN", "IDENTITY", "RANDOM_PHASES", "SPLIT_ALIGN",
    "appendix_aligned_pattern", "benchmark_pattern", "los_optimal_phases",
    "SdrScaResult", "relaxation_bound", "sdr_sca",
]
