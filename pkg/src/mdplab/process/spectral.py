"""
Matrix spectral densities on uniform grids.

Discrete-time densities live on the circle grid ``theta_k = -pi + 2*pi*k/K``;
continuous-time densities live on a closed line grid ``[-L, L]``.  The
transfer function is ``g(theta) = sum_n a_n exp(i n theta)`` and the density
is ``f = g g^* / (2 pi)``.
"""

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy.fft import next_fast_len

from ..errors import NotPSDError, ResolutionError, SpectralError, SubsamplingExhausted, ValidationError
from ..matkit import check_hermitian, hermitian_sqrt, min_eigenvalue
from .models import normalize_model

DEFAULT_K = 4096


@dataclass(frozen=True, eq=False)
class SpectralGrid:
    """Hermitian d x d density values on a uniform grid.

    ``domain`` is ``"circle"`` (periodic, thetas on [-pi, pi)) or ``"line"``
    (thetas on a closed interval, endpoints included).
    """

    thetas: np.ndarray
    values: np.ndarray
    domain: str = "circle"
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.ndim != 3 or v.shape[1] != v.shape[2] or v.shape[0] != len(self.thetas):
            raise ValidationError(f"values must be (K, d, d) matching thetas, got {v.shape}")
        if self.domain not in ("circle", "line"):
            raise ValidationError(f"unknown domain {self.domain!r}")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "thetas", np.asarray(self.thetas, dtype=float))

    @property
    def dim(self):
        return self.values.shape[1]

    @property
    def K(self):
        return self.values.shape[0]

    def integral(self):
        """Trapezoid integral of f over its domain (exact rule for trig polynomials on the circle)."""
        if self.domain == "circle":
            return self.values.sum(axis=0) * (2 * np.pi / self.K)
        return np.trapezoid(self.values, self.thetas, axis=0)

    def min_eigenvalues(self):
        return min_eigenvalue(self.values)

    def to_csv(self, path):
        """One row per grid point: theta, then Re/Im of each entry in row-major order."""
        d = self.dim
        header = ["theta"]
        for a in range(d):
            for b in range(d):
                header += [f"re_{a}{b}", f"im_{a}{b}"]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for th, m in zip(self.thetas, self.values):
                row = [repr(float(th))]
                for z in m.ravel():
                    row += [repr(float(z.real)), repr(float(z.imag))]
                w.writerow(row)


def circle_thetas(K):
    return -np.pi + 2 * np.pi * np.arange(K) / K


def read_spectral_csv(path, domain="circle"):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    data = np.array([[float(x) for x in r] for r in rows[1:]])
    d = int(round(np.sqrt((data.shape[1] - 1) / 2)))
    vals = (data[:, 1::2] + 1j * data[:, 2::2]).reshape(-1, d, d)
    return SpectralGrid(data[:, 0], vals, domain)


def transfer_function(model, K):
    """g(theta_k) on the circle grid via FFT; shape (K, d, d) complex."""
    J = model.halfwidth
    j = np.arange(-J, J + 1)
    b = np.zeros((K, model.dim, model.dim), dtype=complex)
    # exp(i j theta_k) = (-1)^j exp(2 pi i j k / K)
    np.add.at(b, j % K, model.coeffs * ((-1.0) ** j)[:, None, None])
    return np.fft.ifft(b, axis=0) * K


def spectral_from_coeffs(model, K=DEFAULT_K):
    """Spectral density f = g g^*/(2 pi) of a discrete MA model on K circle points."""
    if K < 4 * model.halfwidth + 4:
        raise ResolutionError(f"K={K} too small for J={model.halfwidth} (need >= 4J+4)")
    g = transfer_function(model, K)
    f = g @ np.conj(np.swapaxes(g, 1, 2)) / (2 * np.pi)
    return SpectralGrid(circle_thetas(K), f, "circle", {"K": K, "source": "coeffs"})


def coeffs_from_spectral(f, J, eps):
    """Moving-average coefficients whose transfer function is the positive root of 2 pi f.

    ``a_j`` are the discrete Fourier coefficients of ``sqrt(2 pi f(theta))``
    for ``|j| <= J``; the result is renormalized to unit Gram sum.
    """
    if f.domain != "circle":
        raise ValidationError("coeffs_from_spectral needs a circle-domain grid")
    K = f.K
    if K < 4 * J + 4:
        raise ResolutionError(f"K={K} too small for J={J} (need >= 4J+4)")
    try:
        g = hermitian_sqrt(2 * np.pi * check_hermitian(f.values, tol=1e-10))
    except NotPSDError as exc:
        raise SpectralError(str(exc)) from exc
    # a_j = (1/K) sum_k g(theta_k) exp(-i j theta_k)
    c = np.fft.fft(g, axis=0) / K
    j = np.arange(-J, J + 1)
    a = c[j % K] * ((-1.0) ** j)[:, None, None]
    return normalize_model(a.real, eps)


def resample(f, K_new):
    """Trigonometric interpolation of a circle grid onto K_new points (FFT zero padding).

    Exact when f is a trigonometric polynomial of degree below min(K, K_new)/2.
    """
    K = f.K
    # spectrum indexed by frequency n for the function theta -> f(theta)
    coef = np.fft.fft(f.values, axis=0) / K
    n = np.fft.fftfreq(K, 1.0 / K).astype(int)
    if K % 2 == 0:
        # split the Nyquist term symmetrically so real-valued data stays real
        nyq = K // 2
        half = coef[n == -nyq] / 2
        coef[n == -nyq] = half
        coef = np.concatenate([coef, half])
        n = np.concatenate([n, [nyq]])
    shift = np.exp(-1j * n * np.pi)  # grid starts at -pi
    coef = coef * shift[:, None, None]
    keep = np.abs(n) < K_new / 2
    th = circle_thetas(K_new)
    phase = np.exp(1j * np.outer(th, n[keep]))
    out = np.einsum("kn,nab->kab", phase, coef[keep])
    meta = dict(f.metadata, K=K_new, resampled_from=K)
    return SpectralGrid(th, out, "circle", meta)


def subsampled_spectral(f, m):
    """Density of (X_{mk})_k: f_m(theta) = (1/m) sum_{i<m} f((theta + 2 pi i)/m).

    Evaluated exactly on grid points when ``K`` is divisible by ``m`` (and
    the half-offset ``(K/m)(m-1)/2`` is an integer); the output grid then has
    ``K/m`` points.  Otherwise ``f`` is first resampled by trigonometric
    interpolation to the nearest admissible size and the result metadata
    carries ``resampled=True``.
    """
    if m < 1:
        raise ValidationError("m must be >= 1")
    if f.domain != "circle":
        raise ValidationError("subsampled_spectral needs a circle-domain grid")
    resampled = False
    K = f.K
    if K % m or ((K // m) * (m - 1)) % 2:
        per = -(-K // m)
        if (per * (m - 1)) % 2:
            per += 1
        f = resample(f, per * m)
        K = f.K
        resampled = True
    P = K // m
    idx = (np.arange(P)[:, None] + P * (np.arange(m)[None, :] + (m - 1) // 2) + (P * ((m - 1) % 2)) // 2) % K
    vals = f.values[idx].mean(axis=1)
    meta = dict(f.metadata, K=P, subsample=m, resampled=resampled)
    return SpectralGrid(circle_thetas(P), vals, "circle", meta)


def min_subsampling(f, sigma, m_max=256):
    """Smallest m with f_m(theta) >= sigma^2/(2 pi) I at every grid point."""
    if not 0 < sigma < 1:
        raise ValidationError("sigma must lie in (0, 1)")
    target = sigma**2 / (2 * np.pi)
    best = (None, -np.inf)
    for m in range(1, m_max + 1):
        lo = float(np.min(subsampled_spectral(f, m).min_eigenvalues()))
        if lo >= target - 1e-12:
            return m
        if lo > best[1]:
            best = (m, lo)
    raise SubsamplingExhausted(best[0], best[1], target)


# -- continuous time ---------------------------------------------------------


def ct_spectral(model, lam_max, K):
    """f(lambda) = g g^*/(2 pi), g(lambda) = h sum_i a_{s_i} exp(i lambda s_i), on [-lam_max, lam_max]."""
    lam = np.linspace(-lam_max, lam_max, K)
    phase = np.exp(1j * np.outer(lam, model.times))
    g = model.grid_step * np.einsum("ks,sab->kab", phase, model.samples)
    f = g @ np.conj(np.swapaxes(g, 1, 2)) / (2 * np.pi)
    grid = SpectralGrid(lam, f, "line", {"K": K, "lam_max": lam_max})
    mass = np.trace(grid.integral()).real / model.dim
    grid.metadata["tail_mass"] = float(abs(1.0 - mass))
    return grid


def _interp_matrix(x, xp, vals):
    flat = vals.reshape(len(xp), -1)
    re = np.stack([np.interp(x, xp, flat[:, c].real, left=0.0, right=0.0) for c in range(flat.shape[1])], -1)
    im = np.stack([np.interp(x, xp, flat[:, c].imag, left=0.0, right=0.0) for c in range(flat.shape[1])], -1)
    return (re + 1j * im).reshape(len(x), *vals.shape[1:])


def ct_subsampled_spectral(f, t, K_out=1024, tail_tol=1e-8):
    """Density of (X_{tk})_k: f_t(theta) = (1/t) sum_k f((theta + 2 pi k)/t).

    The sum is truncated to ``|theta + 2 pi k|/t <= lam_max`` and ``f`` is
    linearly interpolated between grid points.  If the line grid reports a
    tail mass above ``tail_tol`` the result metadata carries a warning.
    """
    if f.domain != "line":
        raise ValidationError("ct_subsampled_spectral needs a line-domain grid")
    if t <= 0:
        raise ValidationError("t must be positive")
    lam_max = float(f.thetas[-1])
    th = circle_thetas(K_out)
    kmax = int(np.ceil((lam_max * t + np.pi) / (2 * np.pi)))
    out = np.zeros((K_out, f.dim, f.dim), dtype=complex)
    for k in range(-kmax, kmax + 1):
        x = (th + 2 * np.pi * k) / t
        mask = np.abs(x) <= lam_max
        if np.any(mask):
            out[mask] += _interp_matrix(x[mask], f.thetas, f.values)
    out /= t
    tail = f.metadata.get("tail_mass")
    meta = {"K": K_out, "t": t, "tail_mass": tail, "tail_warning": bool(tail is not None and tail > tail_tol)}
    return SpectralGrid(th, out, "circle", meta)


def gaussian_bump(d, width, lam_max, K):
    """Line-domain density (2 pi width^2)^(-1/2) exp(-lambda^2/(2 width^2)) I, total mass I."""
    lam = np.linspace(-lam_max, lam_max, K)
    dens = np.exp(-0.5 * (lam / width) ** 2) / (np.sqrt(2 * np.pi) * width)
    grid = SpectralGrid(lam, dens[:, None, None] * np.eye(d), "line", {"K": K, "lam_max": lam_max})
    grid.metadata["tail_mass"] = float(abs(1.0 - np.trapezoid(dens, lam)))
    return grid


def fft_length(n):
    return next_fast_len(n)
