"""
Monte Carlo estimators for the variance, scaled CGF and tail rates of S_n.

Conventions: ``S_n = F(X_1) + ... + F(X_n)``; the scaled CGF at level beta is

    Lambda_n(lam) = n^-(1-2 beta) * ln E exp(lam S_n / (sigma n^beta)),

whose limit is lam^2/2, and the tail rate for threshold c is

    n^-(1-2 beta) * ln P(S_n > c sigma n^(1-beta))  ->  -c^2/2.

Every n on a grid gets its own noise stream, so estimates at different n
are independent.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special, stats

from ..errors import ValidationError
from .. import funcs as _funcs
from .. import rng
from . import sequences
from .sampling import log_mean_exp, riemann_weight, sample_sums

DEFAULT_EPS1 = 0.25
MIN_ESS = 50.0
MIN_HITS = 20


def _n_grid(n_grid):
    g = [int(n) for n in n_grid]
    if not g or any(n < 1 for n in g) or any(b <= a for a, b in zip(g, g[1:])):
        raise ValidationError("n_grid must be a nonempty increasing list of positive integers")
    return g


def _check_beta(beta):
    if not 0 < beta < 0.5:
        raise ValidationError("beta must lie in (0, 0.5)")


# -- variance -------------------------------------------------------------------


@dataclass
class VarianceEstimate:
    """Per-n second moments of S_n and the extrapolated asymptotic variance.

    ``sigma_n[i]`` estimates sqrt(E S_n^2) and ``sigma2_n[i]`` estimates
    E S_n^2 / n (time-normalized for continuous models).
    """

    n_grid: list
    sigma_n: np.ndarray
    sigma2_n: np.ndarray
    stderrs: np.ndarray
    sigma2_limit: float
    sigma2_limit_se: float
    radius: float
    replicates: int
    degenerate: bool
    step: float = 1.0
    samples: dict = field(default=None, repr=False)

    @property
    def sigma_hat(self):
        return math.sqrt(max(self.sigma2_limit, 0.0))

    def rows(self):
        return [{"n": n, "sigma_n": float(s), "sigma2_n": float(v), "stderr": float(e)}
                for n, s, v, e in zip(self.n_grid, self.sigma_n, self.sigma2_n, self.stderrs)]


def _jackknife_se_mean(x):
    # the delete-one jackknife SE of a sample mean reduces to sd / sqrt(M)
    return float(np.std(x, ddof=1) / math.sqrt(len(x)))


def estimate_sigma2(model, F, n_grid, M, seed, step=None, threads=None, keep_samples=False):
    """sigma^2 = lim E S_n^2 / n from M independent paths per n.

    The limit is a_K^2 / K at the largest grid point K, with a_n = sqrt(E S_n^2);
    ``radius`` is the square-root-subadditivity error radius of a_K / sqrt(K)
    computed from the pairs available on the grid.
    """
    if M < 100:
        raise ValidationError("need M >= 100 replicates")
    grid = _n_grid(n_grid)
    h = riemann_weight(model, step)
    s2, se, kept = [], [], {}
    for n in grid:
        s = sample_sums(model, F, n, M, seed, "variance", step, threads)
        t = n * h
        sq = s * s / t
        s2.append(float(sq.mean()))
        se.append(max(_jackknife_se_mean(sq), 1e-300))
        if keep_samples:
            kept[n] = s
    s2, se = np.array(s2), np.array(se)
    t_grid = np.array(grid) * h
    a = np.sqrt(s2 * t_grid)
    C = sequences.observed_sqrt_constant(a, grid)
    radius = sequences.SQRT_FACTOR * C / math.sqrt(t_grid[-1])
    degenerate = bool(s2[-1] <= 2 * se[-1])
    return VarianceEstimate(grid, a, s2, se, float(s2[-1]), float(se[-1]), radius, M, degenerate, h,
                            kept if keep_samples else None)


# -- scaled CGF -------------------------------------------------------------------


@dataclass
class CGFEstimate:
    """Scaled CGF estimates on an (n, lambda) grid.

    ``values[i, j]`` is Lambda_n(lam) at ``n_grid[i]``, ``lambda_grid[j]``.
    Entries outside ``|lam| <= eps1 * sigma_hat * n^(beta/2)`` are reported
    but marked ``in_window = False`` and ignored by ``a_n`` / ``b_n``.
    ``unstable`` marks entries whose exponential weights have an effective
    sample size below ``MIN_ESS`` (the MGF is then driven by a handful of
    draws and the delta-method error is unreliable).
    """

    beta: float
    lambda_grid: np.ndarray
    n_grid: list
    values: np.ndarray
    stderrs: np.ndarray
    ess: np.ndarray
    in_window: np.ndarray
    unstable: np.ndarray
    eps1: float
    sigma_hat: float
    sigma_hat_se: float
    a_n: list
    b_n: list
    replicates: int
    step: float = 1.0

    def target(self):
        return 0.5 * self.lambda_grid**2

    def rows(self):
        out = []
        for i, n in enumerate(self.n_grid):
            for j, lam in enumerate(self.lambda_grid):
                out.append({
                    "n": n, "lambda": float(lam), "Lambda_hat": float(self.values[i, j]),
                    "stderr": float(self.stderrs[i, j]), "target": float(0.5 * lam * lam),
                    "ess": float(self.ess[i, j]), "in_window": bool(self.in_window[i, j]),
                    "unstable": bool(self.unstable[i, j]),
                })
        return out


def scaled_cgf_from_sums(s, n, lambda_grid, beta, sigma_hat, t=None):
    """Lambda_n(lam), its SE and the weight ESS for a sample of S_n.

    ``t`` replaces n as the time horizon for continuous models.
    """
    t = n if t is None else t
    norm = t ** (1 - 2 * beta)
    vals, ses, ess = [], [], []
    for lam in lambda_grid:
        if lam == 0:
            vals.append(0.0)
            ses.append(0.0)
            ess.append(float(len(s)))
            continue
        acc = log_mean_exp(lam * s / (sigma_hat * t**beta))
        vals.append(acc.value / norm)
        ses.append(acc.stderr / norm)
        ess.append(acc.ess)
    return np.array(vals), np.array(ses), np.array(ess)


def estimate_scaled_cgf(model, F, beta, lambda_grid, n_grid, M, seed, sigma_hat=None,
                        eps1=DEFAULT_EPS1, step=None, threads=None):
    """Monte Carlo scaled CGF with quadratic bounds a_n <= 2 Lambda / lam^2 <= b_n.

    If ``sigma_hat`` is None the plug-in sqrt(mean S_K^2 / K) from the draws
    at the largest grid point K is used (its SE is reported).
    """
    _check_beta(beta)
    grid = _n_grid(n_grid)
    lam = np.asarray(lambda_grid, dtype=float)
    h = riemann_weight(model, step)
    sums = [sample_sums(model, F, n, M, seed, "cgf", step, threads) for n in grid]
    if sigma_hat is None:
        tK = grid[-1] * h
        sq = sums[-1] ** 2 / tK
        v = float(sq.mean())
        sigma_hat = math.sqrt(v)
        sigma_hat_se = _jackknife_se_mean(sq) / (2 * sigma_hat)
    else:
        sigma_hat_se = 0.0
    if not sigma_hat > 0:
        raise ValidationError("sigma_hat must be positive")
    K = len(grid)
    vals, ses, ess = np.zeros((K, lam.size)), np.zeros((K, lam.size)), np.zeros((K, lam.size))
    win = np.zeros((K, lam.size), dtype=bool)
    for i, (n, s) in enumerate(zip(grid, sums)):
        t = n * h
        vals[i], ses[i], ess[i] = scaled_cgf_from_sums(s, n, lam, beta, sigma_hat, t)
        win[i] = np.abs(lam) <= eps1 * sigma_hat * t ** (beta / 2) + 1e-15
    unstable = ess < MIN_ESS
    a_n, b_n = [], []
    for i in range(K):
        use = win[i] & (lam != 0)
        if np.any(use):
            q = 2 * vals[i, use] / lam[use] ** 2
            a_n.append(float(q.min()))
            b_n.append(float(q.max()))
        else:
            a_n.append(None)
            b_n.append(None)
    return CGFEstimate(beta, lam, grid, vals, ses, ess, win, unstable, eps1, float(sigma_hat),
                       float(sigma_hat_se), a_n, b_n, M, h)


# -- tails ------------------------------------------------------------------------


def wilson_interval(k, M, z=1.96):
    """Wilson score interval for a binomial proportion."""
    p = k / M
    den = 1 + z * z / M
    mid = (p + z * z / (2 * M)) / den
    half = z * math.sqrt(p * (1 - p) / M + z * z / (4 * M * M)) / den
    return max(mid - half, 0.0), min(mid + half, 1.0)


@dataclass
class TailEstimate:
    """Scaled log tail probabilities for S_n > c sigma n^(1-beta) and S_n < -c sigma n^(1-beta).

    When a side has no hits its rate is ``-inf`` and only the Wilson upper
    bound is meaningful (``upper_bound_only``).  ``under_sampled`` marks
    entries with fewer than ``MIN_HITS`` observed or expected hits, the
    expectation taken from the Gaussian approximation S_n ~ N(0, sigma^2 n).
    """

    beta: float
    c: float
    n_grid: list
    rates: np.ndarray
    lower_rates: np.ndarray
    stderrs: np.ndarray
    lower_stderrs: np.ndarray
    hits: np.ndarray
    lower_hits: np.ndarray
    rate_bounds: np.ndarray
    lower_rate_bounds: np.ndarray
    upper_bound_only: np.ndarray
    under_sampled: np.ndarray
    sigma_hat: float
    replicates: int
    step: float = 1.0

    @property
    def target(self):
        return -0.5 * self.c**2

    def rows(self):
        out = []
        for i, n in enumerate(self.n_grid):
            out.append({
                "n": n, "rate": float(self.rates[i]), "stderr": float(self.stderrs[i]),
                "hits": int(self.hits[i]), "lower_rate": float(self.lower_rates[i]),
                "lower_stderr": float(self.lower_stderrs[i]), "lower_hits": int(self.lower_hits[i]),
                "rate_upper_bound": float(self.rate_bounds[i]),
                "under_sampled": bool(self.under_sampled[i]), "target": self.target,
            })
        return out


def _scaled_log_rate(k, M, norm):
    lo, hi = wilson_interval(k, M)
    bound = math.log(hi) / norm
    if k == 0:
        return -math.inf, math.inf, bound
    rate = math.log(k / M) / norm
    se = (math.log(hi) - math.log(lo)) / (2 * 1.96) / norm
    return rate, se, bound


def estimate_tail_rate(model, F, beta, c, n_grid, M, seed, sigma_hat, step=None, threads=None):
    """Plain Monte Carlo tail rates with Wilson-interval errors on the log scale."""
    _check_beta(beta)
    if c < 0:
        raise ValidationError("c must be nonnegative")
    if not sigma_hat > 0:
        raise ValidationError("sigma_hat must be positive")
    grid = _n_grid(n_grid)
    h = riemann_weight(model, step)
    cols = {k: [] for k in ("r", "se", "b", "k", "lr", "lse", "lb", "lk", "ubo", "us")}
    for n in grid:
        t = n * h
        s = sample_sums(model, F, n, M, seed, "tails", step, threads)
        thr = c * sigma_hat * t ** (1 - beta)
        norm = t ** (1 - 2 * beta)
        k_up, k_lo = int(np.count_nonzero(s > thr)), int(np.count_nonzero(s < -thr))
        r, se, b = _scaled_log_rate(k_up, M, norm)
        lr, lse, lb = _scaled_log_rate(k_lo, M, norm)
        expected = M * special.ndtr(-c * t ** (0.5 - beta))
        for key, v in zip(("r", "se", "b", "k", "lr", "lse", "lb", "lk"), (r, se, b, k_up, lr, lse, lb, k_lo)):
            cols[key].append(v)
        cols["ubo"].append(k_up == 0 or k_lo == 0)
        cols["us"].append(min(k_up, k_lo) < MIN_HITS or expected < MIN_HITS)
    a = {k: np.array(v) for k, v in cols.items()}
    return TailEstimate(beta, float(c), grid, a["r"], a["lr"], a["se"], a["lse"], a["k"], a["lk"], a["b"],
                        a["lb"], a["ubo"], a["us"], float(sigma_hat), M, h)


def gaussian_tail_rate(n, beta, c):
    """n^-(1-2 beta) ln P(Z > c n^(1/2-beta)) for standard normal Z (exact, via log_ndtr)."""
    return float(special.log_ndtr(-c * n ** (0.5 - beta)) / n ** (1 - 2 * beta))


# -- first exponential moment -------------------------------------------------------


@dataclass
class MomentCheck:
    mean_exp_abs: float
    stderr: float
    stable: bool
    running: list
    quadrature: float = None


def moment_1_check(F, budget=1_000_000, seed=0, n0=1 << 12):
    """E exp|F(X_0)| under the standard Gaussian, with a doubling-budget stabilization verdict."""
    y = rng.generator(seed, "moment-1").standard_normal((budget, F.dim))
    e = np.exp(np.abs(F(y)))
    sizes, means, ses = _funcs._running_means(e, min(n0, budget))
    running = [{"budget": s, "mean": m, "stderr": se} for s, m, se in zip(sizes, means, ses)]
    quad = _funcs.gaussian_expectation(F, lambda v: math.exp(abs(v)))
    return MomentCheck(means[-1], ses[-1], _funcs._stabilized(means, ses), running, quad)


def linear_abs_exp_moment():
    """E exp|Z| = 2 e^(1/2) Phi(1) for Z ~ N(0, 1)."""
    return 2 * math.exp(0.5) * stats.norm.cdf(1.0)
