"""Estimators and deterministic checks for moderate deviations of partial sums."""

from .estimators import (
    CGFEstimate,
    MomentCheck,
    TailEstimate,
    VarianceEstimate,
    estimate_scaled_cgf,
    estimate_sigma2,
    estimate_tail_rate,
    gaussian_tail_rate,
    linear_abs_exp_moment,
    moment_1_check,
    scaled_cgf_from_sums,
    wilson_interval,
)
from .sampling import LogMeanExp, log_mean_exp, sample_sums
from .sequences import (
    c_alpha_lower,
    c_alpha_upper,
    extrapolate_sqrt_limit,
    lower_feasible_sequence,
    seq_bound_lower,
    seq_bound_upper,
    sqrt_feasible_sequence,
    sqrt_subadditive_check,
    sqrt_superadditive_check,
    upper_feasible_sequence,
)
from .surgery import (
    SandwichReport,
    SurgeryDiagnostics,
    identity_residuals,
    remainder_constant,
    sandwich_check,
    surgery_diagnostics,
    surgery_samples,
)
