"""
Path simulation with an exact past/future decomposition.

Paths are assembled from two filtered noise blocks: the *past* part uses
noise indices ``t < split_at`` only and the *future* part uses ``t >=
split_at`` only.  ``values`` is always ``past + future`` (elementwise, in
that order), for plain simulation as well as for explicit splits, so the two
entry points return bitwise-identical paths.  Outside its support each
component is exactly zero, e.g. white-noise paths equal their noise exactly.
"""

from dataclasses import dataclass

import numpy as np
from scipy.fft import irfft, next_fast_len, rfft

from ..errors import ValidationError
from .. import rng
from .models import CTModel, MAModel

_DIRECT_MAX_TAPS = 33
NOISE_STREAM = "ma-noise"


@dataclass(frozen=True, eq=False)
class PathSample:
    """A simulated trajectory (n x d), optionally with its past/future parts."""

    values: np.ndarray
    seed: int
    times: np.ndarray
    past: np.ndarray = None
    future: np.ndarray = None

    @property
    def length(self):
        return self.values.shape[0]

    @property
    def dim(self):
        return self.values.shape[1]


def _filter(coeffs, noise):
    """X[k] = sum_j a_j noise[k + J + j] for the valid range; noise is (B, L, d).

    Returns shape ``(B, L - 2J, d)``.
    """
    taps, d, _ = coeffs.shape
    J = taps // 2
    B, L, _ = noise.shape
    n_out = L - 2 * J
    if taps <= _DIRECT_MAX_TAPS:
        out = np.zeros((B, n_out, d))
        for i in range(taps):
            out += noise[:, i : i + n_out] @ coeffs[i].T
        return out
    nfft = next_fast_len(L, real=True)
    # full convolution with c[i] = a_{J-i}; valid outputs are indices 2J..L-1
    kernel = rfft(coeffs[::-1], nfft, axis=0)  # (nf, d, d)
    spec = rfft(noise, nfft, axis=1)  # (B, nf, d)
    prod = np.einsum("fab,nfb->nfa", kernel, spec)
    full = irfft(prod, nfft, axis=1)
    return full[:, 2 * J : L]


def _components(coeffs, noise_fn, k_lo, k_hi, split_at, d):
    """Past and future parts of X_k for k in [k_lo, k_hi].

    ``noise_fn(t0, t1)`` returns the (B, t1 - t0, d) noise block for indices
    ``t0 <= t < t1``.  Returns arrays of shape (B, n, d).
    """
    J = coeffs.shape[0] // 2
    n = k_hi - k_lo + 1
    noise = noise_fn(k_lo - J, k_hi + J + 1)
    B = noise.shape[0]
    past = np.zeros((B, n, d))
    future = np.zeros((B, n, d))
    t = np.arange(k_lo - J, k_hi + J + 1)

    p_hi = min(k_hi, split_at - 1 + J)
    if p_hi >= k_lo:
        sl = slice(0, p_hi - k_lo + 1 + 2 * J)
        block = np.where((t[sl] < split_at)[None, :, None], noise[:, sl], 0.0)
        past[:, : p_hi - k_lo + 1] = _filter(coeffs, block)

    f_lo = max(k_lo, split_at - J)
    if f_lo <= k_hi:
        sl = slice(f_lo - k_lo, n + 2 * J)
        block = noise[:, sl]
        if t[sl][0] < split_at:
            block = np.where((t[sl] >= split_at)[None, :, None], block, 0.0)
        future[:, f_lo - k_lo :] = _filter(coeffs, block)

    return past, future


def _discrete_noise(seed, replicates, d, stream=NOISE_STREAM):
    return lambda t0, t1: rng.gaussian_batch(seed, stream, replicates, t0, t1, d)


def simulate_batch(model, n, seed, replicates, start=1, stream=NOISE_STREAM, parts=False):
    """Paths X_start..X_{start+n-1} for each replicate index; shape (B, n, d).

    With ``parts=True`` returns ``(values, past, future)``.
    """
    if n < 1:
        raise ValidationError("n must be >= 1")
    d = model.dim
    past, future = _components(
        model.coeffs, _discrete_noise(seed, replicates, d, stream), start, start + n - 1, 1, d
    )
    values = past + future
    return (values, past, future) if parts else values


def simulate(model, n, seed, start=1, replicate=0):
    """One path of the discrete moving average at times start..start+n-1."""
    values = simulate_batch(model, n, seed, [replicate], start)[0]
    return PathSample(values, seed, np.arange(start, start + n))


def split(model, n, seed, start=1, replicate=0):
    """Same draws as :func:`simulate`, returned with the past/future parts.

    The past part only involves noise indices ``j <= 0``, the future part
    only ``j > 0``; ``values == past + future`` exactly.
    """
    values, past, future = simulate_batch(model, n, seed, [replicate], start, parts=True)
    return PathSample(values[0], seed, np.arange(start, start + n), past[0], future[0])


# -- continuous time ---------------------------------------------------------


def _ct_stride(model, out_step):
    q = out_step / model.grid_step
    if q < 1 - 1e-9 or abs(q - round(q)) > 1e-9:
        raise ValidationError(f"out_step={out_step} is not a multiple of grid_step={model.grid_step}")
    return int(round(q))


def ct_simulate_batch(model, T, out_step, seed, replicates, start=0.0, stream=NOISE_STREAM, parts=False):
    """Grid approximation of X_t = int a_s dw_{t+s} at t = start + k*out_step, 0 <= k*out_step < T.

    Brownian increments over cells ``[g h, (g+1) h)`` are ``sqrt(h)`` times
    the counter-based normal with index ``g``; the past part uses ``g < 0``.
    """
    if T <= 0:
        raise ValidationError("T must be positive")
    q = _ct_stride(model, out_step)
    n_out = int(np.floor(T / out_step + 1e-9))
    if n_out < 1:
        raise ValidationError("T shorter than one output step")
    g0 = int(round(start / model.grid_step))
    if abs(g0 * model.grid_step - start) > 1e-9 * max(1.0, abs(start)):
        raise ValidationError("start must lie on the kernel grid")
    coeffs = np.sqrt(model.grid_step) * model.samples
    d = model.dim
    past, future = _components(
        coeffs, _discrete_noise(seed, replicates, d, stream), g0, g0 + (n_out - 1) * q, 0, d
    )
    past, future = past[:, ::q], future[:, ::q]
    values = past + future
    return (values, past, future) if parts else values


def ct_simulate(model, T, out_step, seed, replicate=0, start=0.0):
    values = ct_simulate_batch(model, T, out_step, seed, [replicate], start)[0]
    times = start + out_step * np.arange(values.shape[0])
    return PathSample(values, seed, times)


def ct_split(model, T, out_step, seed, replicate=0, start=0.0):
    values, past, future = ct_simulate_batch(model, T, out_step, seed, [replicate], start, parts=True)
    times = start + out_step * np.arange(values.shape[0])
    return PathSample(values[0], seed, times, past[0], future[0])


def simulate_any(model, n, seed, replicates, start=None, step=None, stream=NOISE_STREAM, parts=False):
    """Dispatch on model type; for CTModel ``n`` counts output steps of size ``step``."""
    if isinstance(model, CTModel):
        step = step or model.grid_step
        start = 0.0 if start is None else start
        return ct_simulate_batch(model, n * step, step, seed, replicates, start, stream, parts)
    if not isinstance(model, MAModel):
        raise ValidationError(f"unsupported model type {type(model).__name__}")
    return simulate_batch(model, n, seed, replicates, 1 if start is None else start, stream, parts)


def past_decay_statistic(model, n, eps, M, seed, threads=None):
    """Per-replicate sup_{1<=k<=n} k^(1+eps/2) |X_k^past| (discrete model)."""
    w = np.arange(1, n + 1) ** (1.0 + 0.5 * eps)

    def work(reps):
        _, past, _ = simulate_batch(model, n, seed, reps, 1, stream="past-decay", parts=True)
        return np.max(w * np.linalg.norm(past, axis=2), axis=1)

    return rng.run_replicates(work, M, threads=threads)
