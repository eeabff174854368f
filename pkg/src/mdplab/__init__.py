"""Moderate-deviation numerics for nonlinear functionals of stationary Gaussian processes."""

from . import funcs, matkit, mdp, process, rng
from .errors import (
    ConfigError,
    DegenerateModelError,
    MDPLabError,
    NotPSDError,
    ResolutionError,
    SpectralError,
    SubsamplingExhausted,
    ValidationError,
)

__version__ = "0.1.0"
