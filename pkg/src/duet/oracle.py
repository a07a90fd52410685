"""Closed-form reference values used as ground truth."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from .rng import NoiseStream, W1


def ou_moments(r0: float, t: float) -> tuple[float, float]:
    """Mean and variance of dr = -r dt + dW at time t, started from r0."""
    if t < 0:
        raise ValueError("t must be >= 0")
    return r0 * math.exp(-t), -math.expm1(-2.0 * t) / 2.0


def half_normal_cdf(x, t: float = 1.0):
    """P(|N(0, t)| <= x)."""
    if t <= 0:
        raise ValueError("t must be > 0")
    x = np.asarray(x, dtype=float)
    out = special.erf(np.maximum(x, 0.0) / math.sqrt(2.0 * t))
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class HalfNormalLaw:
    """Law of |W(t)| for a standard Brownian motion started at 0."""

    t: float = 1.0

    def __post_init__(self):
        if self.t <= 0:
            raise ValueError("t must be > 0")

    def cdf(self, x):
        return half_normal_cdf(x, self.t)

    def ppf(self, p):
        return math.sqrt(2.0 * self.t) * special.erfinv(p)

    @property
    def mean(self) -> float:
        return math.sqrt(2.0 * self.t / math.pi)

    @property
    def second_moment(self) -> float:
        return self.t


def sample_reflected_bm(t_grid, noise: NoiseStream, x0: float = 0.0) -> np.ndarray:
    """|x0 + W| on ``t_grid`` from exact Gaussian increments (W1 channel)."""
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or t.size == 0:
        raise ValueError("t_grid must be a non-empty 1-d array")
    if t[0] < 0 or np.any(np.diff(t) <= 0):
        raise ValueError("t_grid must be increasing and start at t >= 0")
    dt = np.diff(t, prepend=0.0)
    z = noise.normals(t.size, W1, start=0)
    w = np.cumsum(np.sqrt(dt) * z)
    if t[0] == 0:
        w[0] = 0.0
    return np.abs(x0 + w)


def doob_bound(t: float, T: float, D: float) -> float:
    """min(1, 18 t T D exp(-(D-1)^2)); bounds P(sup_[0,tT] |r2| > |r2(0)| + D)."""
    if min(t, T, D) <= 0:
        raise ValueError("t, T and D must be > 0")
    return min(1.0, 18.0 * t * T * D * math.exp(-((D - 1.0) ** 2)))


def exit_ode_u(x, a: float):
    """Solution of u''/2 - u' = -1, u'(0) = u(a) = 0.

    Bounds the mean exit time of |r1| from [0, a] for any drift bounded by 1.
    """
    x_arr = np.asarray(x, dtype=float)
    if a <= 0:
        raise ValueError("a must be > 0")
    if np.any(x_arr < 0) or np.any(x_arr > a):
        raise ValueError(f"x must lie in [0, {a}]")
    # grouped so that u(a) is exactly 0
    u = 0.5 * (math.exp(2.0 * a) - np.exp(2.0 * x_arr)) - (a - x_arr)
    return float(u) if u.ndim == 0 else u


def doob_martingale_f(x: float) -> float:
    """f(x) = int_0^x exp(y^2) dy, so that f(r) is a martingale for the OU process."""
    if not abs(x) <= 10.0:
        raise ValueError("|x| must be <= 10")
    val, _ = integrate.quad(lambda y: math.exp(y * y), 0.0, abs(x), epsabs=0.0,
                            epsrel=1e-13, limit=200)
    return math.copysign(val, x)


def bm_exit_mean(x: float, a: float, b: float) -> float:
    """Expected exit time of standard BM from (a, b) started at x."""
    return (x - a) * (b - x)


def bm_lower_exit_probability(x: float, a: float, b: float) -> float:
    """P(BM from x leaves (a, b) through a)."""
    return (b - x) / (b - a)


def bm_hitting_laplace(distance: float, lam: float = 1.0) -> float:
    """E exp(-lam tau) for BM to first reach a level ``distance`` away."""
    return math.exp(-abs(distance) * math.sqrt(2.0 * lam))
