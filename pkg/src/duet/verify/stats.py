"""Small statistical helpers shared by the estimators."""

from __future__ import annotations

import math
from dataclasses import dataclass, asdict

import numpy as np
from scipy import stats as sps


@dataclass
class Estimate:
    name: str
    value: float
    se: float
    n_effective: int

    def __post_init__(self):
        self.value = float(self.value)
        self.se = float(self.se)
        self.n_effective = int(self.n_effective)
        if self.se < 0 or math.isnan(self.se):
            raise ValueError(f"standard error of {self.name} must be >= 0")

    def to_dict(self) -> dict:
        return asdict(self)


def mean_estimate(name: str, x) -> Estimate:
    """Sample mean with SE from the per-path sample variance."""
    x = np.asarray(x, dtype=float)
    n = x.size
    if n == 0:
        raise ValueError(f"no samples for {name}")
    se = float(np.std(x, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return Estimate(name, float(np.mean(x)), se, n)


def proportion_estimate(name: str, flags) -> Estimate:
    flags = np.asarray(flags, dtype=bool)
    n = flags.size
    p = float(flags.mean())
    return Estimate(name, p, math.sqrt(p * (1 - p) / n), n)


def lp_norm_estimate(name: str, x, p: int = 4) -> Estimate:
    """(E|x|^p)^(1/p) with a delta-method SE."""
    m = mean_estimate(name, np.abs(np.asarray(x, dtype=float)) ** p)
    if m.value == 0:
        return Estimate(name, 0.0, 0.0, m.n_effective)
    val = m.value ** (1.0 / p)
    return Estimate(name, val, m.se * val / (p * m.value), m.n_effective)


def ratio_estimate(name: str, a: Estimate, b: Estimate) -> Estimate:
    """a/b treating the two estimates as independent."""
    r = a.value / b.value
    rel = math.hypot(a.se / a.value if a.value else 0.0, b.se / b.value)
    return Estimate(name, r, abs(r) * rel, min(a.n_effective, b.n_effective))


def difference_estimate(name: str, a: Estimate, b: Estimate) -> Estimate:
    return Estimate(name, a.value - b.value, math.hypot(a.se, b.se),
                    min(a.n_effective, b.n_effective))


def ks_statistic(samples, cdf) -> float:
    """Exact two-sided Kolmogorov-Smirnov distance sup |F_n - F|."""
    x = np.sort(np.asarray(samples, dtype=float).ravel())
    n = x.size
    if n == 0:
        raise ValueError("samples must be non-empty")
    f = np.asarray(cdf(x), dtype=float)
    i = np.arange(1, n + 1)
    d_plus = np.max(i / n - f)
    d_minus = np.max(f - (i - 1) / n)
    return float(max(d_plus, d_minus, 0.0))


def ks_critical(n: int, level: float = 0.01) -> float:
    """Asymptotic critical value of the one-sample KS distance."""
    return float(sps.kstwobign.isf(level) / math.sqrt(n))


def bootstrap_se(x, statistic, n_boot: int = 200, seed: int = 0) -> float:
    x = np.asarray(x)
    rng = np.random.default_rng(seed)
    reps = np.empty(n_boot)
    for b in range(n_boot):
        reps[b] = statistic(x[rng.integers(0, x.size, x.size)])
    return float(np.std(reps, ddof=1))


def loglog_slope(x, y) -> tuple[float, float]:
    """OLS slope of log y on log x and its standard error (nan if any y <= 0)."""
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    if np.any(y <= 0) or np.any(x <= 0):
        return math.nan, math.nan
    res = sps.linregress(np.log(x), np.log(y))
    return float(res.slope), float(res.stderr)


def within(value: float, target: float, se: float, rel: float = 0.0, k: float = 4.0) -> bool:
    """|value - target| <= max(k se, rel |target|)."""
    return abs(value - target) <= max(k * se, rel * abs(target))
