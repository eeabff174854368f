"""
Noise-swapping diagnostics for partial sums.

Two independent noise sequences drive X and Y.  Each path is split at noise
index 0 into a past part (indices <= 0) and a future part (indices > 0).
On the window k = -m+1..n define

    S_past(Z)   = sum_{k=-m+1}^{0} F(Z_k)       S_fut(Z) = sum_{k=1}^{n} F(Z_k)
    D_fut       = S_fut(Y_past + X_fut) - S_fut(X)
    D_past      = S_past(X_past + Y_fut) - S_past(X)

Then S_past(X) + S_fut(X) = S'_m + S''_n - D_past - D_fut with
S'_m = S_past(X_past + Y_fut), S''_n = S_fut(Y_past + X_fut); the two
primed sums are independent and distributed as S_m and S_n.
"""

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .. import rng
from ..errors import ValidationError
from ..process.models import CTModel
from ..process.simulate import simulate_any
from .estimators import MIN_ESS, _check_beta
from .sampling import log_mean_exp, riemann_weight

DEFAULT_CAP = 1e6


def _window(model, m, n, seed, reps, stream, step):
    # the first m points (up to time 0) form the past block
    start = -m + 1
    if isinstance(model, CTModel):
        start = -(m - 1) * (step or model.grid_step)
    return simulate_any(model, m + n, seed, reps, start=start, step=step, stream=stream, parts=True)


def surgery_samples(model, F, m, n, M, seed, step=None, threads=None):
    """Per-replicate surgery scalars, shape (M, 6).

    Columns: S_past(X) and S_fut(X) evaluated on the simulated path, the same
    two sums evaluated on the recombined path X_past + X_fut, then S'_m and
    S''_n.  Continuous models use Riemann weights.
    """
    if m < 1 or n < 1:
        raise ValidationError("need m, n >= 1")
    if model.dim != F.dim:
        raise ValidationError("model and function dimensions differ")
    w = riemann_weight(model, step)
    sx, sy = f"surgery-x/m={m}/n={n}", f"surgery-y/m={m}/n={n}"

    def work(reps):
        xv, xp, xf = _window(model, m, n, seed, reps, sx, step)
        _, yp, yf = _window(model, m, n, seed, reps, sy, step)
        fx = F(xv)
        fx_rec = F(xp + xf)
        f_mix_past = F(xp[:, :m] + yf[:, :m])
        f_mix_fut = F(yp[:, m:] + xf[:, m:])
        out = np.empty((len(reps), 6))
        out[:, 0] = fx[:, :m].sum(axis=1) * w
        out[:, 1] = fx[:, m:].sum(axis=1) * w
        out[:, 2] = fx_rec[:, :m].sum(axis=1) * w
        out[:, 3] = fx_rec[:, m:].sum(axis=1) * w
        out[:, 4] = f_mix_past.sum(axis=1) * w
        out[:, 5] = f_mix_fut.sum(axis=1) * w
        return out

    return rng.run_replicates(work, M, threads=threads)


def identity_residuals(cols):
    """Exact rational residual of the swap identity per replicate.

    The left side uses sums over the simulated path; the correction terms
    D are exact differences against the recombined path.  The residual is
    zero exactly when the simulated path equals past + future bitwise.
    """
    res = np.empty(len(cols))
    for i, (sp, sf, rp, rf, s1, s2) in enumerate(cols):
        Sp, Sf, Rp, Rf, P1, P2 = map(Fraction, (sp, sf, rp, rf, s1, s2))
        d_past, d_fut = P1 - Rp, P2 - Rf
        res[i] = float((Sp + Sf) - (P1 + P2 - d_past - d_fut))
    return res


@dataclass
class SurgeryDiagnostics:
    """Exponential moments of the future-swap difference, per n (window m = n).

    ``remainder_const[i]`` estimates the smallest C with
    E exp(u R) <= exp(C sigma^2 u^2) over a grid of |u| <= eps, for the
    remainder R = S_{m,n} - S'_m - S''_n.
    """

    n_grid: list
    eps: float
    moment_estimates: np.ndarray
    stderrs: np.ndarray
    past_moment_estimates: np.ndarray
    identity_residuals: np.ndarray
    diverging: np.ndarray
    remainder_const: np.ndarray
    sigma_hat: float
    replicates: int
    cap: float

    def rows(self):
        return [{"n": n, "moment": float(a), "stderr": float(b), "past_moment": float(c),
                 "max_identity_residual": float(d), "remainder_const": float(e), "diverging": bool(f)}
                for n, a, b, c, d, e, f in zip(self.n_grid, self.moment_estimates, self.stderrs,
                                                self.past_moment_estimates, self.identity_residuals,
                                                self.remainder_const, self.diverging)]


def _exp_abs_moment(d, eps):
    e = np.exp(eps * np.abs(d))
    return float(e.mean()), float(e.std(ddof=1) / math.sqrt(len(e)))


def remainder_constant(R, eps, sigma2, n_u=8):
    """max over u in +-eps*(1..n_u)/n_u of ln E exp(u R) / (sigma^2 u^2)."""
    best = 0.0
    for k in range(1, n_u + 1):
        for u in (eps * k / n_u, -eps * k / n_u):
            best = max(best, log_mean_exp(u * R).value / (sigma2 * u * u))
    return best


def surgery_diagnostics(model, F, n_grid, M, eps=0.1, seed=0, sigma_hat=None, cap=DEFAULT_CAP,
                        step=None, threads=None):
    if not eps > 0:
        raise ValidationError("eps must be positive")
    grid = [int(n) for n in n_grid]
    mom, se, pmom, resid, div, rc = [], [], [], [], [], []
    sig2 = None if sigma_hat is None else sigma_hat**2
    for n in grid:
        cols = surgery_samples(model, F, n, n, M, seed, step, threads)
        d_fut = cols[:, 5] - cols[:, 3]
        d_past = cols[:, 4] - cols[:, 2]
        a, b = _exp_abs_moment(d_fut, eps)
        mom.append(a)
        se.append(b)
        pmom.append(_exp_abs_moment(d_past, eps)[0])
        resid.append(float(np.max(np.abs(identity_residuals(cols)))))
        div.append(a > cap)
        R = (cols[:, 0] + cols[:, 1]) - cols[:, 4] - cols[:, 5]
        t = 2 * n * riemann_weight(model, step)
        s2 = sig2 if sig2 is not None else float(np.mean((cols[:, 0] + cols[:, 1]) ** 2) / t)
        rc.append(remainder_constant(R, eps, s2) if s2 > 0 else 0.0)
        if sig2 is None and n == grid[-1]:
            sigma_used = math.sqrt(s2)
    sigma_used = sigma_hat if sigma_hat is not None else sigma_used
    return SurgeryDiagnostics(grid, eps, np.array(mom), np.array(se), np.array(pmom), np.array(resid),
                              np.array(div), np.array(rc), float(sigma_used), M, cap)


# -- sandwich ---------------------------------------------------------------------


@dataclass
class SandwichReport:
    """Log-scale terms of the two-sided bound on phi_{m+n}(lam).

    ``lower``/``upper`` are the logs of the outer expressions including the
    correction factors built from ``C``; ``holds`` tests
    lower - 4 se <= log phi_{m+n} <= upper + 4 se.
    """

    m: int
    n: int
    lam: float
    beta: float
    p: float
    C: float
    log_phi_mn: float
    log_phi_mn_se: float
    lower: float
    lower_se: float
    upper: float
    upper_se: float
    terms: dict
    in_window: bool
    unstable: bool
    holds: bool


def _log_phi(s, lam, sigma, n_scale, beta):
    acc = log_mean_exp(lam * s / (sigma * n_scale**beta))
    return acc.value, acc.stderr, acc.ess


def sandwich_check(model, F, beta, m, n, lam, M, seed, eps=0.1, sigma_hat=None, C=None,
                   step=None, threads=None):
    """Monte Carlo check of the product bounds relating phi_{m+n} to phi_m and phi_n.

    One surgery run supplies S_{m,n} ~ mu_{m+n} and the independent pair
    S'_m ~ mu_m, S''_n ~ mu_n.  ``C`` defaults to the remainder constant of
    the same draws; ``sigma_hat`` defaults to the plug-in from S_{m,n}.
    """
    _check_beta(beta)
    cols = surgery_samples(model, F, m, n, M, seed, step, threads)
    w = riemann_weight(model, step)
    tm, tn = m * w, n * w
    t = tm + tn
    s_mn = cols[:, 0] + cols[:, 1]
    s_m, s_n = cols[:, 4], cols[:, 5]
    if sigma_hat is None:
        sigma_hat = math.sqrt(float(np.mean(s_mn**2)) / t)
    R = s_mn - s_m - s_n
    if C is None:
        C = remainder_constant(R, eps, sigma_hat**2)
    q = t ** (beta / 2)
    p = q / (q - 1) if q > 1 else math.inf
    lam_m = (tm / t) ** beta * lam
    lam_n = (tn / t) ** beta * lam
    corr = lam * lam / t ** (1.5 * beta)

    lp_mn, se_mn, ess_mn = _log_phi(s_mn, lam, sigma_hat, t, beta)
    lo_m, lo_m_se, e1 = _log_phi(s_m, lam_m / p, sigma_hat, tm, beta)
    lo_n, lo_n_se, e2 = _log_phi(s_n, lam_n / p, sigma_hat, tn, beta)
    up_m, up_m_se, e3 = _log_phi(s_m, lam_m * p, sigma_hat, tm, beta)
    up_n, up_n_se, e4 = _log_phi(s_n, lam_n * p, sigma_hat, tn, beta)

    lower = p * (lo_m + lo_n) - C * corr / p
    upper = (up_m + up_n) / p + C * corr
    lower_se = p * math.hypot(lo_m_se, lo_n_se)
    upper_se = math.hypot(up_m_se, up_n_se) / p
    band_lo = 4 * math.hypot(lower_se, se_mn)
    band_hi = 4 * math.hypot(upper_se, se_mn)
    holds = (lower - band_lo <= lp_mn) and (lp_mn <= upper + band_hi)
    terms = {
        "log_phi_m_lower_arg": lo_m, "log_phi_n_lower_arg": lo_n,
        "log_phi_m_upper_arg": up_m, "log_phi_n_upper_arg": up_n,
        "lower_correction": -C * corr / p, "upper_correction": C * corr,
    }
    unstable = min(ess_mn, e1, e2, e3, e4) < MIN_ESS
    in_window = abs(lam) <= eps * sigma_hat * q + 1e-15
    return SandwichReport(m, n, float(lam), beta, p, float(C), lp_mn, se_mn, lower, lower_se, upper,
                          upper_se, terms, bool(in_window), bool(unstable), bool(holds))
