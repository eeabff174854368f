"""Monte Carlo draws of partial sums S_n = F(X_1) + ... + F(X_n)."""

import numpy as np

from .. import rng
from ..errors import ValidationError
from ..process.models import CTModel
from ..process.simulate import simulate_any


def sum_stream(stream, n):
    return f"{stream}/n={n}"


def _check_dims(model, F):
    if model.dim != F.dim:
        raise ValidationError(f"model dimension {model.dim} != function dimension {F.dim}")


def riemann_weight(model, step=None):
    """Weight of each term in the sum: 1 in discrete time, the output step for CTModel."""
    if isinstance(model, CTModel):
        return float(step or model.grid_step)
    return 1.0


def sample_sums(model, F, n, M, seed, stream="sums", step=None, threads=None):
    """M independent draws of S_n, shape (M,).

    For a CTModel, ``n`` counts output steps and the sum is the Riemann sum
    ``step * sum_k F(X_{k step})`` approximating the time integral.
    """
    _check_dims(model, F)
    if M < 1 or n < 1:
        raise ValidationError("need n >= 1 and M >= 1")
    w = riemann_weight(model, step)
    name = sum_stream(stream, n)

    def work(reps):
        x = simulate_any(model, n, seed, reps, step=step, stream=name)
        s = F(x).sum(axis=1)
        return s * w if w != 1.0 else s

    return rng.run_replicates(work, M, threads=threads)


class LogMeanExp:
    """Streaming accumulator for log(mean(exp(x))) and its delta-method error.

    Keeps a running maximum and the shifted sums of exp(x - max) and
    exp(2(x - max)).  Feeding chunks in a fixed order gives a deterministic
    result.
    """

    def __init__(self):
        self.count = 0
        self.shift = -np.inf
        self.s1 = 0.0
        self.s2 = 0.0

    def update(self, x):
        x = np.asarray(x, dtype=float).ravel()
        if x.size == 0:
            return self
        if not np.all(np.isfinite(x)):
            raise ValidationError("non-finite exponent")
        new = max(self.shift, float(x.max()))
        if new > self.shift:
            scale = np.exp(self.shift - new) if np.isfinite(self.shift) else 0.0
            self.s1 *= scale
            self.s2 *= scale * scale
            self.shift = new
        e = np.exp(x - self.shift)
        self.s1 += float(e.sum())
        self.s2 += float(np.dot(e, e))
        self.count += x.size
        return self

    @property
    def value(self):
        return self.shift + np.log(self.s1 / self.count)

    @property
    def stderr(self):
        """SE of the log-mean: sd(w) / (mean(w) sqrt(M)), w = exp(x)."""
        M = self.count
        m1 = self.s1 / M
        var = max(self.s2 / M - m1 * m1, 0.0) * M / max(M - 1, 1)
        return float(np.sqrt(var / M) / m1)

    @property
    def ess(self):
        """Effective sample size (sum w)^2 / sum w^2 of the exponential weights."""
        return self.s1 * self.s1 / self.s2


def log_mean_exp(x, chunk=rng.DEFAULT_BATCH * 16):
    acc = LogMeanExp()
    x = np.asarray(x, dtype=float)
    for i in range(0, len(x), chunk):
        acc.update(x[i : i + chunk])
    return acc
