"""
Moving-average models in discrete and (grid-discretized) continuous time.

A discrete model stores ``a_j`` for ``j = -J..J`` as an array of shape
``(2J+1, d, d)``; index ``J + j`` holds ``a_j``.  The process is

    X_n = sum_j a_j xi_{n+j},    xi_j iid N(0, I_d),

and the coefficients are normalized so that ``sum_j a_j a_j^T = I``, which
makes every X_n standard normal.
"""

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.special import zeta

from ..errors import DegenerateModelError, NotPSDError, ValidationError
from ..matkit import inverse_sqrt
from .. import rng


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def _as_coeff_stack(raw):
    a = np.asarray(raw, dtype=float)
    if a.ndim == 1:
        a = a[:, None, None]
    if a.ndim != 3 or a.shape[1] != a.shape[2]:
        raise ValidationError(f"coefficients must have shape (2J+1, d, d), got {a.shape}")
    if a.shape[0] % 2 == 0:
        raise ValidationError("need an odd number of coefficients (indices -J..J)")
    return a


def decay_sup(coeffs, eps, step=1.0):
    """sup over stored indices of (|s|+1)^(1.5+eps) * ||a_s|| (spectral norm)."""
    half = coeffs.shape[0] // 2
    s = np.abs(np.arange(-half, half + 1)) * step
    norms = np.linalg.norm(coeffs, ord=2, axis=(1, 2))
    return float(np.max((s + 1.0) ** (1.5 + eps) * norms))


@dataclass(frozen=True, eq=False)
class MAModel:
    """Truncated matrix moving average with normalized coefficients.

    Attributes
    ----------
    coeffs : ndarray, shape (2J+1, d, d)
        ``coeffs[J + j]`` is ``a_j``.
    decay_eps : float
        Exponent excess in the decay condition ``a_j = O(|j|^(-1.5-eps))``.
    tail_bound : float
        ``sup_j (|j|+1)^(1.5+eps) ||a_j||`` over the stored coefficients.
    """

    coeffs: np.ndarray
    decay_eps: float
    tail_bound: float = field(default=None)

    def __post_init__(self):
        a = _frozen(_as_coeff_stack(self.coeffs))
        object.__setattr__(self, "coeffs", a)
        if self.decay_eps <= 0:
            raise ValidationError("decay_eps must be positive")
        if self.tail_bound is None:
            object.__setattr__(self, "tail_bound", decay_sup(a, self.decay_eps))

    @property
    def dim(self):
        return self.coeffs.shape[1]

    @property
    def halfwidth(self):
        return self.coeffs.shape[0] // 2

    def coeff(self, j):
        """``a_j``, or the zero matrix outside the stored range."""
        if abs(j) > self.halfwidth:
            return np.zeros((self.dim, self.dim))
        return self.coeffs[self.halfwidth + j]

    def normalization_error(self):
        g = np.einsum("jab,jcb->ac", self.coeffs, self.coeffs)
        return float(np.max(np.abs(g - np.eye(self.dim))))

    def truncation_tail(self):
        """Bound on sum_{|j|>J} ||a_j|| implied by the decay envelope."""
        return 2.0 * self.tail_bound * float(zeta(1.5 + self.decay_eps, self.halfwidth + 2))

    def to_dict(self):
        return {
            "dim": self.dim,
            "halfwidth": self.halfwidth,
            "eps": self.decay_eps,
            "coeffs": [a.ravel().tolist() for a in self.coeffs],
        }

    def to_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1)


def model_from_dict(doc, normalize=True):
    """Inverse of :meth:`MAModel.to_dict` (row-major flattened matrices)."""
    try:
        d = int(doc["dim"])
        half = int(doc["halfwidth"])
        eps = float(doc["eps"])
        coeffs = np.asarray(doc["coeffs"], dtype=float).reshape(2 * half + 1, d, d)
    except (KeyError, ValueError, TypeError) as exc:
        raise ValidationError(f"malformed model document: {exc}") from exc
    if normalize:
        return normalize_model(coeffs, eps)
    return MAModel(coeffs, eps)


def load_model(path, normalize=True):
    with open(path) as fh:
        return model_from_dict(json.load(fh), normalize=normalize)


def _gram(coeffs, weight=1.0):
    return weight * np.einsum("jab,jcb->ac", coeffs, coeffs)


def normalize_model(raw_coeffs, eps):
    """Rescale coefficients by R^(-1/2), R = sum_j a_j a_j^T, so that R becomes I.

    Examples
    --------
    >>> normalize_model([0.0, 1.0, 1.0], 0.5).coeffs[:, 0, 0]
    array([0.        , 0.70710678, 0.70710678])
    """
    a = _as_coeff_stack(raw_coeffs)
    if not np.any(a):
        raise DegenerateModelError("all coefficients are zero")
    try:
        w = inverse_sqrt(_gram(a))
    except NotPSDError as exc:
        raise DegenerateModelError(str(exc)) from exc
    return MAModel(np.einsum("ab,jbc->jac", w, a), eps)


def _orthogonal(gen, d):
    q, r = np.linalg.qr(gen.standard_normal((d, d)))
    return q * np.sign(np.diag(r))


def power_law_model(d, eps, J, seed):
    """Canonical fixture: a_j proportional to (|j|+1)^(-1.5-eps) Q_j, then normalized.

    ``Q_j`` are seeded random orthogonal matrices except ``Q_0 = I``, so
    ``J = 0`` gives white noise.
    """
    if d < 1 or J < 0:
        raise ValidationError("need d >= 1 and J >= 0")
    if eps <= 0:
        raise ValidationError("eps must be positive")
    gen = rng.generator(seed, "power-law-model")
    raw = np.empty((2 * J + 1, d, d))
    for i, j in enumerate(range(-J, J + 1)):
        q = np.eye(d) if j == 0 else _orthogonal(gen, d)
        raw[i] = (abs(j) + 1.0) ** (-1.5 - eps) * q
    return normalize_model(raw, eps)


def white_noise(d):
    return MAModel(np.eye(d)[None], 0.5)


def covariance(model, lag):
    """E[X_lag X_0^T] = sum_j a_j a_{j+lag}^T over stored indices."""
    if abs(lag) > 2 * model.halfwidth:
        # exactly zero for the truncated model
        return np.zeros((model.dim, model.dim))
    a = model.coeffs
    if lag >= 0:
        return np.einsum("jab,jcb->ac", a[: a.shape[0] - lag], a[lag:])
    return np.einsum("jab,jcb->ac", a[-lag:], a[: a.shape[0] + lag])


# -- continuous time ---------------------------------------------------------


@dataclass(frozen=True, eq=False)
class CTModel:
    """Kernel a_s sampled at s = i*h, i = -S..S, normalized so h*sum a a^T = I."""

    samples: np.ndarray
    grid_step: float
    decay_eps: float

    def __post_init__(self):
        object.__setattr__(self, "samples", _frozen(_as_coeff_stack(self.samples)))
        if self.grid_step <= 0:
            raise ValidationError("grid_step must be positive")
        if self.decay_eps <= 0:
            raise ValidationError("decay_eps must be positive")

    @property
    def dim(self):
        return self.samples.shape[1]

    @property
    def support(self):
        return self.samples.shape[0] // 2

    @property
    def times(self):
        s = self.support
        return np.arange(-s, s + 1) * self.grid_step

    def normalization_error(self):
        return float(np.max(np.abs(_gram(self.samples, self.grid_step) - np.eye(self.dim))))

    def decay_sup(self):
        return decay_sup(self.samples, self.decay_eps, self.grid_step)

    def holder_quotient(self, max_delta=1.0):
        """Largest finite-difference Hölder quotient of s -> (|s|+1)^(1.5+eps) a_s.

        Ranges over grid pairs with separation in (0, max_delta]; a bounded
        value under grid refinement is the discrete analogue of the Hölder
        condition on the weighted kernel.
        """
        w = (np.abs(self.times) + 1.0) ** (1.5 + self.decay_eps)
        weighted = w[:, None, None] * self.samples
        best = 0.0
        max_q = int(np.floor(max_delta / self.grid_step + 1e-9))
        for q in range(1, min(max_q, weighted.shape[0] - 1) + 1):
            diff = np.linalg.norm(weighted[q:] - weighted[:-q], ord=2, axis=(1, 2))
            best = max(best, float(np.max(diff)) / (q * self.grid_step) ** self.decay_eps)
        return best

    def as_discrete(self):
        """Equivalent discrete MA acting on unit-variance increments (coefficients sqrt(h) a_s)."""
        return MAModel(np.sqrt(self.grid_step) * self.samples, self.decay_eps)


def ct_model_from_kernel(kernel, d, h, S, eps):
    """Sample ``kernel(s)`` (returning d x d or scalar) on the grid and normalize."""
    s = np.arange(-S, S + 1) * h
    raw = np.array([np.broadcast_to(np.asarray(kernel(si), dtype=float), (d, d)) for si in s])
    try:
        w = inverse_sqrt(_gram(raw, h))
    except NotPSDError as exc:
        raise DegenerateModelError(str(exc)) from exc
    return CTModel(np.einsum("ab,jbc->jac", w, raw), h, eps)
