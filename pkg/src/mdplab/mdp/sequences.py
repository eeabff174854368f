"""
Deterministic utilities for almost-subadditive sequences.

Sequences are passed as 1-D arrays indexed from 1: ``seq[0]`` is the first
term.  Three families of statements are covered:

* square-root subadditivity ``a_{m+n} <= sqrt(a_m^2 + a_n^2) + eps`` and the
  resulting ``a_n <= (a_1 + k eps) sqrt(n)`` with ``k = sqrt(2)/(sqrt(2)-1)``;
* the limit of ``a_n / sqrt(n)`` with its error radius;
* weighted-average recursions over splits ``m <= n <= 2m`` whose sup/inf are
  controlled by an explicit constant ``C_alpha``.

The constant is rebuilt from the geometric ladder ``n_0 = 2``,
``n_{k+1} = floor(3 n_k / 2)`` and bounded from above with a rigorous
geometric tail estimate, so checks never rely on an unspecified constant.
"""

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ..errors import ValidationError

SQRT_FACTOR = math.sqrt(2) / (math.sqrt(2) - 1)
REL_TOL = 1e-12


def _as_seq(seq):
    a = np.asarray(seq, dtype=float).ravel()
    if a.size == 0:
        raise ValidationError("empty sequence")
    if np.any(a < 0) or not np.all(np.isfinite(a)):
        raise ValidationError("sequence must be finite and nonnegative")
    return a


def _slack(x):
    return REL_TOL * (1.0 + np.abs(x))


# -- square-root subadditivity -------------------------------------------------


def sqrt_defect(seq):
    """Matrix D[m-1, n-1] = a_{m+n} - sqrt(a_m^2 + a_n^2) for m + n <= N (NaN elsewhere)."""
    a = _as_seq(seq)
    N = a.size
    m = np.arange(1, N + 1)
    s = m[:, None] + m[None, :]
    out = np.full((N, N), np.nan)
    ok = s <= N
    out[ok] = a[s[ok] - 1] - np.hypot(a[:, None], a[None, :])[ok]
    return out


@dataclass(frozen=True)
class SqrtBoundCheck:
    hypothesis_holds: bool
    conclusion_holds: bool
    violation: tuple = None
    bound_factor: float = None


def sqrt_subadditive_check(seq, eps):
    """Check ``a_{m+n} <= sqrt(a_m^2+a_n^2) + eps`` and ``a_n <= (a_1 + k eps) sqrt(n)``.

    Returns the first violating pair (m, n) of the hypothesis if any.
    """
    a = _as_seq(seq)
    d = sqrt_defect(a)
    bad = d > eps + _slack(eps)
    violation = None
    if np.any(bad):
        i, j = np.argwhere(bad)[0]
        violation = (int(i + 1), int(j + 1))
    factor = a[0] + SQRT_FACTOR * eps
    n = np.arange(1, a.size + 1)
    concl = bool(np.all(a <= factor * np.sqrt(n) + _slack(a)))
    return SqrtBoundCheck(violation is None, concl, violation, factor)


def sqrt_superadditive_check(seq, eps):
    """Mirror image: ``a_{m+n} >= sqrt(a_m^2+a_n^2) - eps`` implies ``a_n >= (a_1 - k eps) sqrt(n)``."""
    a = _as_seq(seq)
    d = sqrt_defect(a)
    bad = d < -eps - _slack(eps)
    violation = None
    if np.any(bad):
        i, j = np.argwhere(bad)[0]
        violation = (int(i + 1), int(j + 1))
    factor = a[0] - SQRT_FACTOR * eps
    n = np.arange(1, a.size + 1)
    concl = bool(np.all(a >= factor * np.sqrt(n) - _slack(a)))
    return SqrtBoundCheck(violation is None, concl, violation, factor)


def observed_sqrt_constant(seq, index=None):
    """sup |a_{m+n} - sqrt(a_m^2 + a_n^2)| over the pairs available in the data.

    With ``index`` given, ``seq[i]`` is the term at position ``index[i]``
    (a sparse grid); only pairs whose sum is also on the grid are used.
    """
    a = np.asarray(seq, dtype=float)
    if index is None:
        d = sqrt_defect(a)
        return float(np.nanmax(np.abs(d))) if np.any(np.isfinite(d)) else 0.0
    pos = {int(k): i for i, k in enumerate(index)}
    best = 0.0
    for i, m in enumerate(index):
        for j, n in enumerate(index):
            k = pos.get(int(m) + int(n))
            if k is not None:
                best = max(best, abs(a[k] - math.hypot(a[i], a[j])))
    return best


@dataclass(frozen=True)
class SqrtLimit:
    limit_estimate: float
    error_bound: float
    at: int
    C: float


def extrapolate_sqrt_limit(a_seq, C=None, index=None):
    """Estimate lim a_n / sqrt(n) by a_K / sqrt(K) at the largest available K.

    The error radius is ``k C / sqrt(K)``, ``k = sqrt(2)/(sqrt(2)-1)``.  If
    ``C`` is omitted, the observed sup of ``|a_{m+n} - sqrt(a_m^2+a_n^2)|``
    over available pairs is used.

    Examples
    --------
    >>> r = extrapolate_sqrt_limit(np.sqrt(np.arange(1, 101)), C=0.0)
    >>> float(r.limit_estimate), r.error_bound
    (1.0, 0.0)
    """
    a = np.asarray(a_seq, dtype=float)
    if a.size == 0 or np.any(a < 0):
        raise ValidationError("need a nonempty nonnegative sequence")
    idx = np.arange(1, a.size + 1) if index is None else np.asarray(index, dtype=int)
    if C is None:
        C = observed_sqrt_constant(a, None if index is None else idx)
    if C < 0:
        raise ValidationError("C must be nonnegative")
    K = int(idx[-1])
    return SqrtLimit(float(a[-1] / math.sqrt(K)), SQRT_FACTOR * C / math.sqrt(K), K, float(C))


def sqrt_feasible_sequence(N, eps, gen, a1=None):
    """Random a_1..a_N satisfying the square-root subadditivity hypothesis.

    Each term is a uniform fraction of the tightest admissible value.
    """
    a = np.empty(N)
    a[0] = gen.uniform(0.0, 2.0) if a1 is None else a1
    for n in range(2, N + 1):
        m = np.arange(1, n)
        cap = float(np.min(np.hypot(a[m - 1], a[n - m - 1]))) + eps
        a[n - 1] = cap * (1.0 if gen.random() < 0.2 else gen.random())
    return a


# -- weighted-average recursions ------------------------------------------------


def _pow_neg(n, alpha):
    return math.exp(-alpha * math.log(n))


@lru_cache(maxsize=256)
def _ladder_sums(alpha, r=1.0, tol=1e-16):
    """Upper bounds for ln P_inf(r) and sum_k (2 n_k + 1)^(-alpha).

    Terms x_k = (2 n_k + 1)^(-alpha) satisfy x_{k+1} <= rho x_k with
    rho = (5/4)^(-alpha) because 2 n_{k+1} + 1 >= 1.25 (2 n_k + 1) on this
    ladder; the remaining tails are bounded by geometric series.
    """
    rho = 1.25 ** (-alpha)
    logp, s = 0.0, 0.0
    k = 0
    n = 2
    while True:
        x = _pow_neg(2 * n + 1, alpha)
        tail_s = x / (1 - rho)
        tail_lp = r * tail_s / (1 - r * x)
        if tail_s < tol * max(s, 1e-300) and tail_lp <= tol * max(logp, 1e-300):
            break
        logp -= math.log1p(-r * x)
        s += x
        n = (3 * n) // 2
        k += 1
        if k > 200_000:
            break
    return logp + tail_lp, s + tail_s


def _q(n, alpha, r):
    t = _pow_neg(n, alpha)
    return 1.0 / (1.0 - r * t)


def c_alpha_upper(alpha):
    """Constant with sup_n B_n <= (1 + C r) B_1 + C r for r in [0, 1].

    From the ladder argument: sup B <= P (q_2 q_3 B_1 + r (q_3 2^-a + 3^-a + s))
    with P = prod_k q(2 n_k + 1).  Both coefficients are handled at r = 1,
    using convexity of the multiplier in r.
    """
    if not alpha > 0:
        raise ValidationError("alpha must be positive")
    logp, s = _ladder_sums(alpha)
    P = math.exp(logp)
    q2, q3 = _q(2, alpha, 1.0), _q(3, alpha, 1.0)
    U = P * q2 * q3
    V = P * (q3 * 2.0**-alpha + 3.0**-alpha + s)
    return max(U - 1.0, V)


def ladder_upper_bound(alpha, r, B1):
    """The intermediate bound P (q_2 q_3 B_1 + r (q_3 2^-a + 3^-a + s)) at the actual r."""
    logp, s = _ladder_sums(alpha, r)
    P = math.exp(logp)
    q3 = _q(3, alpha, r)
    return P * (_q(2, alpha, r) * q3 * B1 + r * (q3 * 2.0**-alpha + 3.0**-alpha + s))


def ladder_lower_bound(alpha, r, A1):
    """The intermediate bound A_1 / (P q_2 q_3) - r (2^-a + 3^-a + s) at the actual r."""
    logp, s = _ladder_sums(alpha, r)
    U = math.exp(logp) * _q(2, alpha, r) * _q(3, alpha, r)
    return A1 / U - r * (2.0**-alpha + 3.0**-alpha + s)


def c_alpha_lower(alpha):
    """Constant with inf_n A_n >= (1 - C r) A_1 - C r for r in [0, 1]."""
    if not alpha > 0:
        raise ValidationError("alpha must be positive")
    logp, s = _ladder_sums(alpha)
    U = math.exp(logp) * _q(2, alpha, 1.0) * _q(3, alpha, 1.0)
    return max(U - 1.0, 2.0**-alpha + 3.0**-alpha + s)


def _splits(N):
    """All (m, n) with m <= n <= 2m and m + n <= N, as two int arrays."""
    m = np.arange(1, N + 1)
    M, Nn = np.meshgrid(m, m, indexing="ij")
    ok = (M <= Nn) & (Nn <= 2 * M) & (M + Nn <= N)
    return M[ok], Nn[ok]


def _avg_rhs(x, m, n, alpha, r, sign):
    s = (m + n).astype(float)
    sa = s**alpha
    avg = (m * x[m - 1] + n * x[n - 1]) / s
    if sign > 0:
        return sa / (sa - r) * avg + r / sa
    return (sa - r) / sa * avg - r / sa


@dataclass(frozen=True)
class SeqBoundCheck:
    hypothesis_holds: bool
    conclusion_holds: bool
    C_alpha_witness: float
    bound: float
    extreme: float
    violation: tuple = None
    ladder_bound: float = None
    ladder_holds: bool = None


def _check_params(alpha, r):
    if not alpha > 0:
        raise ValidationError("alpha must be positive")
    if not 0 <= r <= 1:
        raise ValidationError("r must lie in [0, 1]")


def seq_bound_upper(B_seq, alpha, r):
    """Check the averaged-growth hypothesis on B and the bound on sup B.

    Hypothesis, for all m <= n <= 2m within range::

        B_{m+n} <= (m+n)^a / ((m+n)^a - r) * (m B_m + n B_n)/(m+n) + r/(m+n)^a

    Conclusion: ``max B <= (1 + C r) B_1 + C r`` with ``C = c_alpha_upper(a)``.
    """
    _check_params(alpha, r)
    B = _as_seq(B_seq)
    m, n = _splits(B.size)
    violation = None
    if m.size:
        rhs = _avg_rhs(B, m, n, alpha, r, +1)
        lhs = B[m + n - 1]
        bad = lhs > rhs + _slack(rhs)
        if np.any(bad):
            i = int(np.argmax(bad))
            violation = (int(m[i]), int(n[i]))
    C = c_alpha_upper(alpha)
    bound = (1 + C * r) * B[0] + C * r
    ext = float(B.max())
    lb = ladder_upper_bound(alpha, r, B[0])
    return SeqBoundCheck(violation is None, ext <= bound + _slack(bound), C, bound, ext, violation,
                         lb, ext <= lb + _slack(lb))


def seq_bound_lower(A_seq, alpha, r):
    """Mirror of :func:`seq_bound_upper`: min A >= (1 - C r) A_1 - C r."""
    _check_params(alpha, r)
    A = _as_seq(A_seq)
    m, n = _splits(A.size)
    violation = None
    if m.size:
        rhs = _avg_rhs(A, m, n, alpha, r, -1)
        lhs = A[m + n - 1]
        bad = lhs < rhs - _slack(rhs)
        if np.any(bad):
            i = int(np.argmax(bad))
            violation = (int(m[i]), int(n[i]))
    C = c_alpha_lower(alpha)
    bound = (1 - C * r) * A[0] - C * r
    ext = float(A.min())
    lb = ladder_lower_bound(alpha, r, A[0])
    return SeqBoundCheck(violation is None, ext >= bound - _slack(bound), C, bound, ext, violation,
                         lb, ext >= lb - _slack(lb))


def _split_rhs_all(x, N, alpha, r, sign):
    """Admissible right-hand sides for index N given x_1..x_{N-1}."""
    m = np.arange(1, N)
    k = N - m
    ok = (m <= k) & (k <= 2 * m)
    return _avg_rhs(x, m[ok], k[ok], alpha, r, sign)


def upper_feasible_sequence(N, alpha, r, gen):
    """Random B_1..B_N meeting the upper hypothesis (equality with probability 1/4)."""
    B = np.zeros(N)
    B[0] = gen.uniform(0.0, 2.0)
    for k in range(2, N + 1):
        cap = float(np.min(_split_rhs_all(B, k, alpha, r, +1)))
        B[k - 1] = cap if gen.random() < 0.25 else cap * gen.random()
    return B


def lower_feasible_sequence(N, alpha, r, gen):
    """Random A_1..A_N meeting the lower hypothesis, kept nonnegative."""
    A = np.zeros(N)
    A[0] = gen.uniform(0.0, 2.0)
    for k in range(2, N + 1):
        floor = max(0.0, float(np.max(_split_rhs_all(A, k, alpha, r, -1))))
        A[k - 1] = floor if gen.random() < 0.25 else floor + gen.exponential(0.1)
    return A
