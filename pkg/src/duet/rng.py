"""Counter-based Gaussian noise streams.

Every draw is a pure function of ``(master_seed, trajectory_index, channel,
counter)``: a SplitMix64 avalanche of the triple gives a per-channel key and
the n-th draw of a channel is ``mix(key + (n + 1) * GOLDEN)``, i.e. the n-th
output of a SplitMix64 generator seeded with the key.  Uniforms use the top
53 bits, shifted by half an ulp so they never hit 0 or 1, and are turned
into normals by inverse-CDF (Wichura's AS241, the same rational
approximation CPython's ``statistics.NormalDist.inv_cdf`` uses).

Random access means streams can be resumed at any step and that results do
not depend on how paths are distributed over workers.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

import numpy as np
from numba import njit

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_INDEX_MULT = 0xD1B54A32D192ED03

W1, W2, INIT = 0, 1, 2
GAUSSIAN_METHOD = "inverse-cdf (AS241) of 53-bit SplitMix64 uniforms"

_U_GOLDEN = np.uint64(GOLDEN)
_U_MIX1 = np.uint64(_MIX1)
_U_MIX2 = np.uint64(_MIX2)
_SH11 = np.uint64(11)
_SH27 = np.uint64(27)
_SH30 = np.uint64(30)
_SH31 = np.uint64(31)
_TWO_M53 = 1.0 / 9007199254740992.0


def mix64(z: int) -> int:
    """SplitMix64 finalizer on Python ints."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * _MIX1) & MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & MASK64
    return z ^ (z >> 31)


def channel_key(master_seed: int, trajectory_index: int, channel: int) -> int:
    if trajectory_index < 0:
        raise ValueError("trajectory_index must be >= 0")
    k = mix64(master_seed + GOLDEN)
    k = mix64(k ^ ((trajectory_index * _INDEX_MULT + GOLDEN) & MASK64))
    k = mix64(k ^ (((channel + 1) * _MIX2) & MASK64))
    return k


@njit(cache=True, inline="always")
def _mix(z):
    z = (z ^ (z >> _SH30)) * _U_MIX1
    z = (z ^ (z >> _SH27)) * _U_MIX2
    return z ^ (z >> _SH31)


@njit(cache=True, inline="always")
def _ppnd16(p):
    q = p - 0.5
    if abs(q) <= 0.425:
        r = 0.180625 - q * q
        num = (((((((2.5090809287301226727e+3 * r +
                     3.3430575583588128105e+4) * r +
                     6.7265770927008700853e+4) * r +
                     4.5921953931549871457e+4) * r +
                     1.3731693765509461125e+4) * r +
                     1.9715909503065514427e+3) * r +
                     1.3314166789178437745e+2) * r +
                     3.3871328727963666080e+0) * q
        den = (((((((5.2264952788528545610e+3 * r +
                     2.8729085735721942674e+4) * r +
                     3.9307895800092710610e+4) * r +
                     2.1213794301586595867e+4) * r +
                     5.3941960214247511077e+3) * r +
                     6.8718700749205790830e+2) * r +
                     4.2313330701600911252e+1) * r +
                     1.0)
        return num / den
    r = p if q <= 0.0 else 1.0 - p
    r = math.sqrt(-math.log(r))
    if r <= 5.0:
        r = r - 1.6
        num = (((((((7.74545014278341407640e-4 * r +
                     2.27238449892691845833e-2) * r +
                     2.41780725177450611770e-1) * r +
                     1.27045825245236838258e+0) * r +
                     3.64784832476320460504e+0) * r +
                     5.76949722146069140550e+0) * r +
                     4.63033784615654529590e+0) * r +
                     1.42343711074968357734e+0)
        den = (((((((1.05075007164441684324e-9 * r +
                     5.47593808499534494600e-4) * r +
                     1.51986665636164571966e-2) * r +
                     1.48103976427480074590e-1) * r +
                     6.89767334985100004550e-1) * r +
                     1.67638483018380384940e+0) * r +
                     2.05319162663775882187e+0) * r +
                     1.0)
    else:
        r = r - 5.0
        num = (((((((2.01033439929228813265e-7 * r +
                     2.71155556874348757815e-5) * r +
                     1.24266094738807843860e-3) * r +
                     2.65321895265761230930e-2) * r +
                     2.96560571828504891230e-1) * r +
                     1.78482653991729133580e+0) * r +
                     5.46378491116411436990e+0) * r +
                     6.65790464350110377720e+0)
        den = (((((((2.04426310338993978564e-15 * r +
                     1.42151175831644588870e-7) * r +
                     1.84631831751005468180e-5) * r +
                     7.86869131145613259100e-4) * r +
                     1.48753612908506148525e-2) * r +
                     1.36929880922735805310e-1) * r +
                     5.99832206555887937690e-1) * r +
                     1.0)
    x = num / den
    if q < 0.0:
        x = -x
    return x


@njit(cache=True, inline="always")
def uniform_at(key, counter):
    h = _mix(key + np.uint64(counter + 1) * _U_GOLDEN)
    return (np.float64(h >> _SH11) + 0.5) * _TWO_M53


@njit(cache=True, inline="always")
def normal_at(key, counter):
    return _ppnd16(uniform_at(key, counter))


@njit(cache=True, nogil=True)
def _fill_normals(key, start, out):
    for i in range(out.shape[0]):
        out[i] = normal_at(key, start + i)


@njit(cache=True, nogil=True)
def _fill_uniforms(key, start, out):
    for i in range(out.shape[0]):
        out[i] = uniform_at(key, start + i)


@njit(cache=True)
def _batch_keys(seed_key, indices, channel):
    out = np.empty(indices.shape[0], dtype=np.uint64)
    ch = np.uint64(channel + 1) * _U_MIX2
    for p in range(indices.shape[0]):
        k = _mix(seed_key ^ (np.uint64(indices[p]) * np.uint64(_INDEX_MULT) + _U_GOLDEN))
        out[p] = _mix(k ^ ch)
    return out


def channel_keys(master_seed: int, indices, channel: int) -> np.ndarray:
    """Vectorised :func:`channel_key` over trajectory indices."""
    idx = np.asarray(indices, dtype=np.int64)
    if idx.size and idx.min() < 0:
        raise ValueError("trajectory_index must be >= 0")
    return _batch_keys(np.uint64(mix64(master_seed + GOLDEN)), idx, channel)


@njit(cache=True)
def _batch_draws(keys, start, n, uniform):
    out = np.empty((keys.shape[0], n))
    for p in range(keys.shape[0]):
        for j in range(n):
            if uniform:
                out[p, j] = uniform_at(keys[p], start + j)
            else:
                out[p, j] = normal_at(keys[p], start + j)
    return out


def initial_draws(master_seed: int, indices, n: int, kind: str = "normal") -> np.ndarray:
    """Per-trajectory initial-condition draws, shape (len(indices), n).

    Row p equals ``NoiseStream(master_seed, indices[p]).initial_normals(n)``
    (or ``initial_uniforms`` for ``kind="uniform"``).
    """
    keys = channel_keys(master_seed, indices, INIT)
    if kind == "normal":
        return _batch_draws(keys, 0, n, False)
    if kind == "uniform":
        return _batch_draws(keys, 1 << 32, n, True)
    raise ValueError("kind must be 'normal' or 'uniform'")


def sub_seed(master_seed: int, tag: str) -> int:
    """Independent master seed for a named sub-ensemble."""
    h = int.from_bytes(hashlib.blake2b(tag.encode(), digest_size=8).digest(), "little")
    return mix64(master_seed ^ h)


@njit(cache=True)
def inverse_normal_cdf(p):
    """Vectorised AS241 quantile, exposed for testing."""
    out = np.empty_like(p)
    for i in range(p.shape[0]):
        out[i] = _ppnd16(p[i])
    return out


@dataclass
class NoiseStream:
    """Driving noise of one trajectory.

    ``cursor`` counts integrator steps already consumed; simulating from a
    stream advances it, so consecutive calls continue the same Brownian
    paths.  Initial-condition draws use a separate channel and never move
    the cursor.
    """

    master_seed: int
    trajectory_index: int
    cursor: int = 0

    def __post_init__(self):
        if not 0 <= self.master_seed <= MASK64:
            raise ValueError("master_seed must be an unsigned 64-bit integer")
        if self.trajectory_index < 0:
            raise ValueError("trajectory_index must be >= 0")
        self._keys = tuple(
            channel_key(self.master_seed, self.trajectory_index, c) for c in (W1, W2, INIT)
        )

    def key(self, channel: int) -> np.uint64:
        return np.uint64(self._keys[channel])

    def normals(self, n: int, channel: int, start: int | None = None) -> np.ndarray:
        """Standard normals for counters ``start .. start+n-1`` (no cursor move)."""
        out = np.empty(n)
        _fill_normals(self.key(channel), self.cursor if start is None else start, out)
        return out

    def increments(self, n: int, dt: float) -> np.ndarray:
        """Next ``n`` Brownian increments as an (n, 2) array; advances the cursor."""
        sq = math.sqrt(dt)
        out = np.empty((n, 2))
        out[:, 0] = self.normals(n, W1) * sq
        out[:, 1] = self.normals(n, W2) * sq
        self.cursor += n
        return out

    def initial_normals(self, n: int) -> np.ndarray:
        return self.normals(n, INIT, start=0)

    def initial_uniforms(self, n: int) -> np.ndarray:
        # offset so these counters never coincide with initial_normals
        out = np.empty(n)
        _fill_uniforms(self.key(INIT), 1 << 32, out)
        return out
