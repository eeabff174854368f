"""Stationary Gaussian moving averages: models, spectral densities, simulation."""

from .models import (
    CTModel,
    MAModel,
    covariance,
    ct_model_from_kernel,
    load_model,
    model_from_dict,
    normalize_model,
    power_law_model,
    white_noise,
)
from .simulate import PathSample, ct_simulate, ct_split, simulate, simulate_any, simulate_batch, split
from .spectral import (
    SpectralGrid,
    coeffs_from_spectral,
    ct_spectral,
    ct_subsampled_spectral,
    gaussian_bump,
    min_subsampling,
    read_spectral_csv,
    resample,
    spectral_from_coeffs,
    subsampled_spectral,
    transfer_function,
)
