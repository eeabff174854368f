"""
Nonlinear test functions F on R^d and numerical checks of their assumptions.

Built-in kinds
--------------
``linear-coordinate``      F(x) = x_1
``lipschitz-smooth-abs``   F(x) = sqrt(1 + |x|^2) - E sqrt(1 + |X|^2)
``log-norm``               F(x) = ln|x| - E ln|X|   (d >= 2 only)

All expectations are under the standard Gaussian measure.  For d <= 4 they
are computed by one-dimensional quadrature (the built-ins depend on x only
through x_1 or |x|); above that, by Monte Carlo with a reported standard
error.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, special, stats

from . import rng
from .errors import ValidationError
from .records import write_table

KINDS = ("linear-coordinate", "lipschitz-smooth-abs", "log-norm")

NORM_FLOOR = 1e-300
_LOG_FLOOR = math.log(NORM_FLOOR)
QUAD_MAX_DIM = 4


def _norm(x):
    return np.sqrt(np.sum(np.square(x), axis=-1))


def _log_norm(x):
    s = np.sum(np.square(x), axis=-1)
    with np.errstate(divide="ignore"):
        return np.maximum(0.5 * np.log(s), _LOG_FLOOR)


def radial_expectation(g, d):
    """E g(|X|) for X ~ N(0, I_d), by adaptive quadrature against the chi density."""
    dist = stats.chi(d)

    def integrand(rho):
        return g(rho) * dist.pdf(rho)

    total = 0.0
    # the chi density is below 1e-300 past radius 40
    for a, b in ((0.0, 1.0), (1.0, 4.0), (4.0, 12.0), (12.0, 40.0)):
        val, _ = integrate.quad(integrand, a, b, epsabs=1e-13, epsrel=1e-11, limit=200)
        total += val
    return total


def coordinate_expectation(g):
    """E g(Z) for Z ~ N(0, 1)."""
    total = 0.0
    for a, b in ((-40.0, -4.0), (-4.0, 0.0), (0.0, 4.0), (4.0, 40.0)):
        val, _ = integrate.quad(lambda z: g(z) * math.exp(-0.5 * z * z) / math.sqrt(2 * math.pi),
                                a, b, epsabs=1e-13, epsrel=1e-11, limit=200)
        total += val
    return total


@dataclass(frozen=True, eq=False)
class TestFunction:
    """A centered function F = F_raw - center_const.

    ``raw`` is only used for kind ``"custom"``; it must accept an array of
    shape (..., d) and return shape (...).
    """

    __test__ = False  # keep pytest from collecting this class

    kind: str
    dim: int
    center_const: float
    lipschitz_const: float = None
    label: str = ""
    raw: object = field(default=None, repr=False)
    center_stderr: float = 0.0

    def raw_values(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "linear-coordinate":
            return x[..., 0].copy()
        if self.kind == "lipschitz-smooth-abs":
            return np.sqrt(1.0 + np.sum(np.square(x), axis=-1))
        if self.kind == "log-norm":
            return _log_norm(x)
        return np.asarray(self.raw(x), dtype=float)

    def __call__(self, x):
        return self.raw_values(x) - self.center_const

    def gap(self, z, r):
        """F_r(z) - F(z) in closed form for the built-ins (vectorized over z)."""
        z = np.asarray(z, dtype=float)
        if self.kind == "linear-coordinate":
            return np.full(z.shape[:-1], float(r))
        if self.kind == "lipschitz-smooth-abs":
            rho = _norm(z)
            return np.sqrt(1.0 + (rho + r) ** 2) - np.sqrt(1.0 + rho**2)
        if self.kind == "log-norm":
            rho = np.maximum(_norm(z), NORM_FLOOR)
            return np.log1p(r / rho)
        raise ValidationError("no closed-form envelope for custom functions")

    @property
    def closed_form(self):
        return self.kind in KINDS


def make_function(kind, d, budget=1_000_000, seed=0):
    """Build a centered built-in function.

    Raises ValidationError for ``log-norm`` with d = 1: ln|x| on the line
    violates the envelope condition (its distributional derivative is not a
    locally finite measure near 0), so it is outside the admissible class.
    """
    if kind not in KINDS:
        raise ValidationError(f"unknown kind {kind!r}; choose from {KINDS}")
    if d < 1:
        raise ValidationError("d must be >= 1")
    if kind == "log-norm" and d < 2:
        raise ValidationError(
            "log-norm requires d >= 2: x -> ln|x| on R violates the envelope "
            "smoothness condition (the integral of exp(F_r - F) diverges at x = 0)"
        )
    if kind == "linear-coordinate":
        return TestFunction(kind, d, 0.0, 1.0, f"x1 (d={d})")
    raw_radial = {"lipschitz-smooth-abs": lambda rho: math.sqrt(1.0 + rho * rho),
                  "log-norm": lambda rho: math.log(rho) if rho > 0 else _LOG_FLOOR}[kind]
    lip = 1.0 if kind == "lipschitz-smooth-abs" else None
    label = {"lipschitz-smooth-abs": "sqrt(1+|x|^2)", "log-norm": "ln|x|"}[kind] + f" (d={d})"
    if d <= QUAD_MAX_DIM:
        c = radial_expectation(raw_radial, d)
        return TestFunction(kind, d, c, lip, label)
    probe = TestFunction(kind, d, 0.0, lip, label)
    y = rng.generator(seed, "center").standard_normal((budget, d))
    v = probe.raw_values(y)
    return TestFunction(kind, d, float(v.mean()), lip, label, center_stderr=float(v.std(ddof=1) / math.sqrt(budget)))


def custom_function(raw, d, budget=200_000, seed=0, label="custom", lipschitz_const=None):
    """Center an arbitrary vectorized callable by Monte Carlo."""
    y = rng.generator(seed, "center").standard_normal((budget, d))
    v = np.asarray(raw(y), dtype=float)
    return TestFunction("custom", d, float(v.mean()), lipschitz_const, label, raw,
                        center_stderr=float(v.std(ddof=1) / math.sqrt(budget)))


def zero_function(d):
    return TestFunction("custom", d, 0.0, 0.0, "zero", lambda x: np.zeros(np.shape(x)[:-1]))


def gaussian_expectation(F, h):
    """E h(F(X)) by quadrature for built-ins (d <= 4); None if not available."""
    if not F.closed_form or F.dim > QUAD_MAX_DIM:
        return None
    if F.kind == "linear-coordinate":
        return coordinate_expectation(lambda z: h(z - F.center_const))
    if F.kind == "lipschitz-smooth-abs":
        return radial_expectation(lambda rho: h(math.sqrt(1 + rho * rho) - F.center_const), F.dim)
    return radial_expectation(lambda rho: h(math.log(max(rho, NORM_FLOOR)) - F.center_const), F.dim)


# -- envelope ---------------------------------------------------------------


@dataclass(frozen=True)
class EnvelopeQuery:
    """Radius and evaluation method for F_r(x) = sup_{|y-x|<=r} F(y)."""

    r: float
    method: str = "closed-form"
    search_samples: int = 4096
    seed: int = 0

    def __post_init__(self):
        if not self.r > 0:
            raise ValidationError("envelope radius must be positive")
        if self.method not in ("closed-form", "ball-search"):
            raise ValidationError(f"unknown envelope method {self.method!r}")


def _ball_points(x, r, n, gen):
    d = x.shape[-1]
    n_sphere = (3 * n) // 4
    u = gen.standard_normal((n, d))
    u /= np.maximum(_norm(u), 1e-300)[:, None]
    radii = np.ones(n)
    radii[n_sphere:] = gen.random(n - n_sphere) ** (1.0 / d)
    return x + r * radii[:, None] * u


def envelope(F, x, q):
    """F_r(x) for a single point x.

    Closed forms are used for the built-ins; ``ball-search`` (and any custom
    F) takes the max over seeded samples, three quarters of them on the
    sphere |y - x| = r, which is a lower bound for the true supremum.
    """
    if not isinstance(q, EnvelopeQuery):
        q = EnvelopeQuery(float(q))
    x = np.asarray(x, dtype=float).reshape(F.dim)
    if q.method == "closed-form" and F.closed_form:
        return float(F(x) + F.gap(x, q.r))
    gen = rng.generator(q.seed, "ball-search")
    pts = _ball_points(x, q.r, q.search_samples, gen)
    return float(max(np.max(F(pts)), F(x)))


# -- assumption checks --------------------------------------------------------


def _running_means(v, n0):
    sizes, means, ses = [], [], []
    n = n0
    while n <= len(v):
        s = v[:n]
        sizes.append(n)
        means.append(float(s.mean()))
        ses.append(float(s.std(ddof=1) / math.sqrt(n)))
        n *= 2
    if sizes[-1] != len(v):
        sizes.append(len(v))
        means.append(float(v.mean()))
        ses.append(float(v.std(ddof=1) / math.sqrt(len(v))))
    return sizes, means, ses


def _stabilized(means, ses, rel_tol=0.05):
    """Cauchy test on the last two running estimates at doubling budgets."""
    if len(means) < 2:
        return True
    a, b = means[-2], means[-1]
    band = 4.0 * math.hypot(ses[-2], ses[-1])
    return abs(b - a) <= max(band, 0.0) and abs(b - a) <= rel_tol * max(abs(b), 1e-300)


@dataclass
class ExpIntegrability:
    mean_exp_plus: float
    mean_exp_minus: float
    stderr_plus: float
    stderr_minus: float
    stable: bool
    running: list
    quadrature_plus: float = None
    quadrature_minus: float = None

    @property
    def diverging(self):
        return not self.stable


def check_exp_integrability(F, budget=1_000_000, seed=0, n0=1 << 12):
    """Monte Carlo estimates of E e^F and E e^-F with a stabilization verdict.

    Running means are recorded at doubling budgets; the estimate counts as
    stabilized when the last two agree within 4 combined standard errors and
    5 percent.  Quadrature values are attached when available.
    """
    y = rng.generator(seed, "exp-integrability").standard_normal((budget, F.dim))
    v = F(y)
    plus, minus = np.exp(v), np.exp(-v)
    sp, mp, ep = _running_means(plus, min(n0, budget))
    _, mm, em = _running_means(minus, min(n0, budget))
    stable = _stabilized(mp, ep) and _stabilized(mm, em)
    running = [{"budget": s, "plus": a, "minus": b} for s, a, b in zip(sp, mp, mm)]
    return ExpIntegrability(mp[-1], mm[-1], ep[-1], em[-1], stable, running,
                            gaussian_expectation(F, math.exp), gaussian_expectation(F, lambda t: math.exp(-t)))


@dataclass
class SmoothnessReport:
    """Table of I(x, r) = E exp(F_r(x + y/2) - F(x + y/2)) and C_hat = max ln I / r."""

    C_hat: float
    rows: list

    def to_csv(self, path):
        write_rows(path, self.rows, ["x_index", "r", "I_hat", "stderr", "ln_I_over_r"])


def write_rows(path, rows, columns):
    return write_table(path, rows, columns)


def _gap_samples(F, z, r, gen, search_samples):
    if F.closed_form:
        return F.gap(z, r)
    # generic fallback: sup over a ball around each point (lower bound)
    out = np.empty(z.shape[0])
    for i, zi in enumerate(z):
        pts = _ball_points(zi, r, search_samples, gen)
        out[i] = max(np.max(F(pts)), F(zi)) - F(zi)
    return out


def estimate_smoothness_constant(F, x_grid, r_grid, budget=1_000_000, seed=0, search_samples=256):
    """Monte Carlo check of the envelope condition on a finite (x, r) grid.

    C_hat is an empirical lower bound for the smallest admissible constant:
    the condition quantifies over all x and r, a grid can only falsify it.
    """
    x_grid = np.atleast_2d(np.asarray(x_grid, dtype=float))
    if x_grid.shape[1] != F.dim or len(x_grid) == 0:
        raise ValidationError("x_grid must be a non-empty (n, d) array")
    r_grid = [float(r) for r in r_grid]
    if any(r <= 0 for r in r_grid):
        raise ValidationError("radii must be positive")
    rows = []
    for i, x in enumerate(x_grid):
        gen = rng.generator(seed, "smoothness", i)
        z = x + 0.5 * gen.standard_normal((budget, F.dim))
        for r in r_grid:
            e = np.exp(_gap_samples(F, z, r, gen, search_samples))
            I = float(e.mean())
            rows.append({"x_index": i, "r": r, "I_hat": I,
                         "stderr": float(e.std(ddof=1) / math.sqrt(budget)),
                         "ln_I_over_r": math.log(I) / r})
    return SmoothnessReport(max(row["ln_I_over_r"] for row in rows), rows)


def _halfnormal_inverse_moment(delta, r, scale=0.5):
    """E[(|z| + r) / max(|z|, delta)] for z ~ N(0, scale^2), by quadrature in log|z|."""
    c = math.sqrt(2 / math.pi) / scale

    def dens(w):
        return c * math.exp(-0.5 * (w / scale) ** 2)

    # |z| >= delta: integrate (1 + r/w) dens(w) dw with w = e^s
    upper, _ = integrate.quad(lambda s: (math.exp(s) + r) * dens(math.exp(s)), math.log(delta), math.log(12 * scale),
                              epsabs=0, epsrel=1e-12, limit=500)
    tail, _ = integrate.quad(lambda w: (1 + r / w) * dens(w), 12 * scale, np.inf, epsabs=1e-15, limit=100)
    inner, _ = integrate.quad(lambda w: (w + r) / delta * dens(w), 0.0, delta, epsabs=0, epsrel=1e-12)
    return upper + tail + inner


@dataclass
class ViolationProbe:
    """Envelope integral I(0, r) for F = ln|x| on the line.

    ``ln_I_over_r`` is the quadrature value for the function as evaluated
    (|x| floored at 1e-300); ``truncation`` shows the same quantity for larger
    floors delta, which grows linearly in ln(1/delta) and has no finite limit.
    """

    rows: list
    truncation: list
    diverging: bool

    def to_csv(self, path):
        write_rows(path, self.rows, ["r", "I_hat", "ln_I_over_r", "I_mc", "stderr_mc", "ln_I_over_r_mc"])


def violation_probe_1d_log(r_grid, budget=1_000_000, seed=0, floors=(1e-2, 1e-4, 1e-8, 1e-16, 1e-32, 1e-64, 1e-128, NORM_FLOOR)):
    gen = rng.generator(seed, "violation-probe")
    z = 0.5 * gen.standard_normal(budget)
    rho = np.maximum(np.abs(z), NORM_FLOOR)
    rows, trunc = [], []
    for r in r_grid:
        r = float(r)
        I = _halfnormal_inverse_moment(NORM_FLOOR, r)
        e = (rho + r) / rho
        I_mc = float(e.mean())
        rows.append({"r": r, "I_hat": I, "ln_I_over_r": math.log(I) / r, "I_mc": I_mc,
                     "stderr_mc": float(e.std(ddof=1) / math.sqrt(budget)),
                     "ln_I_over_r_mc": math.log(I_mc) / r})
        for delta in floors:
            trunc.append({"r": r, "floor": delta, "ln_I_over_r": math.log(_halfnormal_inverse_moment(delta, r)) / r})
    # growth per decade of floor stays bounded away from zero: no finite limit
    growth = []
    for r in r_grid:
        vals = [(t["floor"], t["ln_I_over_r"]) for t in trunc if t["r"] == float(r)]
        for (d0, v0), (d1, v1) in zip(vals, vals[1:]):
            growth.append((v1 - v0) / math.log10(d0 / d1))
    diverging = min(growth) > 0 if growth else False
    return ViolationProbe(rows, trunc, diverging)


def inverse_norm_moment_2d(x, scale=0.5):
    """E 1/|x + scale*Y| for Y ~ N(0, I_2) (Rice distribution closed form)."""
    nu2 = float(np.sum(np.square(x)))
    k = nu2 / (4 * scale**2)
    return math.sqrt(math.pi / 2) / scale * special.i0e(k)
