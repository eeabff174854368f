"""
Small dense Hermitian kernels.

All functions accept a single ``(d, d)`` matrix or a stack ``(..., d, d)``
and operate on the trailing two axes.  Dimensions are expected to be small
(d <= 8), so everything goes through a dense LAPACK eigendecomposition.
"""

import numpy as np

from .errors import NotPSDError, ValidationError

HERMITIAN_TOL = 1e-12
PSD_TOL = 1e-8


def _scale(m):
    return max(1.0, float(np.max(np.abs(m)))) if m.size else 1.0


def check_hermitian(m, tol=HERMITIAN_TOL):
    """Return ``m`` as an array, raising ValidationError unless it is Hermitian."""
    m = np.asarray(m)
    if m.ndim < 2 or m.shape[-1] != m.shape[-2]:
        raise ValidationError(f"expected square matrices, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValidationError("matrix has non-finite entries")
    asym = np.max(np.abs(m - np.conj(np.swapaxes(m, -1, -2)))) if m.size else 0.0
    if asym > tol * _scale(m):
        raise ValidationError(f"matrix is not Hermitian (max asymmetry {asym:.3g})")
    return m


def _eigh(m):
    m = check_hermitian(m)
    # symmetrize so rounding in the strict upper triangle is not ignored
    m = 0.5 * (m + np.conj(np.swapaxes(m, -1, -2)))
    return np.linalg.eigh(m)


def eigh(m):
    """Eigenvalues (ascending) and eigenvectors of a Hermitian matrix or stack."""
    return _eigh(m)


def min_eigenvalue(m):
    """Smallest eigenvalue of a Hermitian matrix (or of each matrix in a stack)."""
    m = check_hermitian(m)
    w = np.linalg.eigvalsh(0.5 * (m + np.conj(np.swapaxes(m, -1, -2))))
    return w[..., 0] if w.ndim > 1 else float(w[0])


def dominates(m, c):
    """True iff every eigenvalue of ``m`` is at least ``c`` (up to 1e-12).

    For a stack, the check must hold for every matrix in it.
    """
    return bool(np.all(min_eigenvalue(m) >= c - 1e-12))


def hermitian_sqrt(m):
    """Positive square root of a Hermitian positive-semidefinite matrix.

    Eigenvalues in ``[-1e-8, 0)`` (relative to the matrix scale) are clipped
    to zero; anything more negative raises NotPSDError.

    Examples
    --------
    >>> hermitian_sqrt(np.diag([4.0, 9.0]))
    array([[2., 0.],
           [0., 3.]])
    """
    m = np.asarray(m)
    w, v = _eigh(m)
    lo = np.min(w) if w.size else 0.0
    if lo < -PSD_TOL * _scale(m):
        raise NotPSDError(f"matrix has eigenvalue {lo:.3g} < 0")
    root = np.sqrt(np.clip(w, 0.0, None))
    out = (v * root[..., None, :]) @ np.conj(np.swapaxes(v, -1, -2))
    if not np.iscomplexobj(m):
        out = out.real
    return 0.5 * (out + np.conj(np.swapaxes(out, -1, -2)))


def inverse_sqrt(m, rcond=1e-14):
    """Inverse of the positive square root; raises NotPSDError if near-singular."""
    m = np.asarray(m)
    w, v = _eigh(m)
    if np.min(w) <= rcond * max(np.max(np.abs(w)), 1e-300):
        raise NotPSDError(f"matrix is singular or indefinite (min eigenvalue {np.min(w):.3g})")
    out = (v / np.sqrt(w)[..., None, :]) @ np.conj(np.swapaxes(v, -1, -2))
    if not np.iscomplexobj(m):
        out = out.real
    return 0.5 * (out + np.conj(np.swapaxes(out, -1, -2)))
