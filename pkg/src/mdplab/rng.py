"""
Counter-based Gaussian noise and ordered replicate execution.

Every standard normal used by the simulators is addressed by a global
index: ``(seed, stream, replicate, t, coordinate)``.  A Philox generator is
keyed by ``(seed, stream, replicate)`` and its counter is positioned at the
block belonging to noise index ``t``, so any window of the noise sequence can
be regenerated without touching the rest.  Overlapping windows and
past/future splits therefore see exactly the same draws.

Uniforms are taken from the top 53 bits of each raw 64-bit output and mapped
through the inverse normal CDF (one raw word per normal), which keeps the
index-to-value map fixed regardless of how a window is sliced.
"""

import os
import zlib
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from scipy.special import ndtri

MASK64 = (1 << 64) - 1
_COUNTER_OFFSET = 1 << 128  # keeps counters positive for negative noise indices
_INV_2_53 = 2.0 ** -53

DEFAULT_BATCH = 64


def stream_code(name):
    """Stable 32-bit code for a named stream (str) or an integer stream id."""
    if isinstance(name, (int, np.integer)):
        return int(name) & 0xFFFFFFFF
    return zlib.crc32(str(name).encode("utf-8"))


def philox_key(seed, stream, replicate):
    if not 0 <= replicate < (1 << 32):
        raise ValueError("replicate index must fit in 32 bits")
    k1 = (stream_code(stream) << 32) | int(replicate)
    return np.array([int(seed) & MASK64, k1], dtype=np.uint64)


def _blocks_per_index(d):
    return -(-d // 4)


def gaussian_block(seed, stream, replicate, t0, t1, d):
    """Standard normals for noise indices ``t0 <= t < t1``, shape ``(t1 - t0, d)``.

    The value at ``(t, i)`` depends only on ``(seed, stream, replicate, t, i)``.
    """
    length = t1 - t0
    if length <= 0:
        return np.zeros((0, d))
    b = _blocks_per_index(d)
    gen = np.random.Philox(key=philox_key(seed, stream, replicate), counter=_COUNTER_OFFSET + t0 * b)
    raw = gen.random_raw(4 * b * length).reshape(length, 4 * b)[:, :d]
    u = ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * _INV_2_53
    return ndtri(u)


def gaussian_batch(seed, stream, replicates, t0, t1, d):
    """Stack of :func:`gaussian_block` over a sequence of replicate indices."""
    out = np.empty((len(replicates), t1 - t0, d))
    for i, r in enumerate(replicates):
        out[i] = gaussian_block(seed, stream, r, t0, t1, d)
    return out


def generator(seed, stream, replicate=0):
    """A ``numpy.random.Generator`` on its own Philox key, for non-indexed draws."""
    return np.random.Generator(np.random.Philox(key=philox_key(seed, stream, replicate)))


def default_threads():
    env = os.environ.get("MDP_LAB_THREADS")
    return int(env) if env else 1


def run_replicates(fn, n_replicates, batch=DEFAULT_BATCH, threads=None):
    """Apply ``fn(replicate_indices)`` over fixed-size batches and concatenate.

    Batches are formed independently of ``threads`` and results are joined in
    replicate order, so the output is bitwise identical for any worker count.
    ``fn`` must return an array whose first axis indexes replicates.
    """
    threads = threads or default_threads()
    batches = [np.arange(s, min(s + batch, n_replicates)) for s in range(0, n_replicates, batch)]
    if threads <= 1 or len(batches) <= 1:
        parts = [fn(b) for b in batches]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(fn, batches))
    return np.concatenate(parts, axis=0)
