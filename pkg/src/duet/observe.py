"""Derived processes and random times read off recorded paths.

All stopping times live on the simulation grid.  A crossing is reported at
the linearly interpolated time inside the first step whose endpoints lie on
opposite sides of the level (or at a grid point that sits exactly on it).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .sde import HorizonError, Trajectory


class GridTooCoarse(ValueError):
    pass


@dataclass
class Path:
    """A scalar path on an increasing time grid."""

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.times.shape != self.values.shape or self.times.ndim != 1:
            raise ValueError("times and values must be 1-d arrays of equal length")

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0]) if len(self.times) > 1 else 0.0

    def __len__(self):
        return len(self.times)


def _as_path(path, attr="r1") -> Path:
    if isinstance(path, Path):
        return path
    if isinstance(path, Trajectory):
        return Path(path.times, getattr(path, attr))
    times, values = path
    return Path(times, values)


def scaled_process(traj, T: float, t_max: float | None = None) -> Path:
    """X_t = r1(tT)/sqrt(T) with time measured in units of T.

    ``traj`` may be a Trajectory (its r1 is used) or an already scaled Path.
    """
    if T <= 0:
        raise ValueError("T must be positive")
    p = _as_path(traj)
    times = (p.times - p.times[0]) / T
    values = p.values / math.sqrt(T)
    if t_max is not None:
        if times[-1] < t_max * (1 - 1e-12):
            raise HorizonError(
                f"path covers t={times[-1]:.6g} in scaled units, need {t_max:.6g}")
        keep = times <= t_max * (1 + 1e-12)
        times, values = times[keep], values[keep]
    return Path(times + p.times[0] / T, values)


@dataclass(frozen=True)
class ScalingParams:
    """Exponent and level bookkeeping for the large-|r1| regime.

    ``c = R**alpha_c`` is the corridor half-width, ``t = R**alpha_t`` the
    short horizon and ``r2_cap = R**alpha`` the allowed size of |r2|.
    ``D`` defaults to 2 sqrt(log T).
    """

    R: float = 256.0
    alpha: float = 0.2
    alpha_t: float = 0.25
    alpha_c: float = 0.33
    beta: float = 1.5
    epsilon: float = 0.1
    T: float = 2048.0
    D: float | None = None
    alpha1: float = 6 / 7
    alpha2: float = 5 / 9

    def __post_init__(self):
        if self.D is None:
            object.__setattr__(self, "D", 2.0 * math.sqrt(math.log(self.T)) if self.T > 1 else 1.0)
        for problem in self.violations():
            raise ValueError(problem)

    def violations(self) -> list[str]:
        out = []
        for name in ("R", "epsilon", "T", "D"):
            if not getattr(self, name) > 0:
                out.append(f"{name} must be > 0")
        if not 0 < self.alpha < self.alpha_t < 2 / 3:
            out.append("alpha and alpha_t must satisfy 0 < alpha < alpha_t < 2/3")
        if not self.alpha_t / 2 < self.alpha_c < 1 / 3:
            out.append("alpha_c must satisfy alpha_t/2 < alpha_c < 1/3")
        if not self.beta > 1:
            out.append("beta must satisfy beta > 1")
        if not (0 < self.alpha1 and 0 < self.alpha2):
            out.append("alpha1 and alpha2 must be > 0")
        return out

    @property
    def c(self) -> float:
        return self.R ** self.alpha_c

    @property
    def t(self) -> float:
        return self.R ** self.alpha_t

    @property
    def r2_cap(self) -> float:
        return self.R ** self.alpha

    def max_dt(self) -> float:
        return 1.0 / (10.0 * (self.R + 2.0 * self.c))


@dataclass
class RotationSchedule:
    sigma: np.ndarray
    tau_c: float | None
    n_tilde: int
    r1_read: np.ndarray

    def increments(self) -> np.ndarray:
        return np.diff(self.sigma)


def _nearest_index(t0: float, dt: float, s: float) -> int:
    # ties go to the earlier grid point
    x = (s - t0) / dt
    i = math.floor(x)
    return i + 1 if x - i > 0.5 else i


def rotation_schedule(traj: Trajectory, params: ScalingParams) -> RotationSchedule:
    """sigma_0 = 0, sigma_{k+1} = sigma_k + 1/|r1(sigma_k)| until t(R) or tau_c."""
    R = abs(traj.r1[0])
    if abs(R - params.R) > 1e-9 * max(1.0, params.R):
        raise ValueError(f"|r1(0)| = {R} does not match params.R = {params.R}")
    if traj.dt > params.max_dt() * (1 + 1e-12):
        raise GridTooCoarse(
            f"grid spacing {traj.dt:.3g} exceeds 1/(10(R + 2c(R))) = {params.max_dt():.3g}")
    t0 = traj.times[0]
    horizon = traj.times[-1] - t0
    t_R, c = params.t, params.c
    dev = np.abs(traj.r1 - traj.r1[0])
    hit = np.flatnonzero(dev >= c)
    i_c = int(hit[0]) if hit.size else None
    tau_c = None if i_c is None else float(traj.times[i_c] - t0)
    stop = t_R if tau_c is None else min(t_R, tau_c)
    if horizon < stop:
        raise HorizonError(f"trajectory covers {horizon:.6g}, rotations need {stop:.6g}")
    last = len(traj) - 1 if i_c is None else i_c
    sigma = [0.0]
    reads = []
    s = 0.0
    while s < stop:
        i = min(_nearest_index(0.0, traj.dt, s), last)
        r = abs(traj.r1[i])
        reads.append(r)
        s = s + 1.0 / r
        sigma.append(s)
    return RotationSchedule(np.array(sigma), tau_c, len(sigma) - 1, np.array(reads))


def _first_crossing(t, g, start=0, direction=0):
    """First time at index >= start where g (level-shifted) reaches zero.

    ``direction`` -1 waits for g <= 0, +1 for g >= 0 and 0 for whichever
    side is opposite to the start.  Returns (time, index) or (None, None).
    """
    if start >= len(g):
        return None, None
    s0 = g[start]
    if s0 == 0.0:
        return float(t[start]), start
    if direction == 0:
        direction = -1 if s0 > 0 else 1
    seg = g[start:]
    hit = np.flatnonzero(seg <= 0.0) if direction < 0 else np.flatnonzero(seg >= 0.0)
    if hit.size == 0:
        return None, None
    i = start + int(hit[0])
    if i == start:
        return float(t[i]), i
    a, b = g[i - 1], g[i]
    frac = a / (a - b)
    return float(t[i - 1] + frac * (t[i] - t[i - 1])), i


def hitting_time(path, level: float, mode: str = "absolute", start: float | None = None):
    """First time the path reaches ``level``.

    ``mode="absolute"`` watches |x|, ``"signed"`` watches x itself.  A path
    that starts on the level returns its start time; ``None`` means the
    level is never reached on the grid.
    """
    p = _as_path(path)
    if mode == "absolute":
        x = np.abs(p.values)
    elif mode == "signed":
        x = p.values
    else:
        raise ValueError("mode must be 'absolute' or 'signed'")
    i0 = 0 if start is None else int(np.searchsorted(p.times, start))
    return _first_crossing(p.times, x - level, i0)[0]


@dataclass
class ExcursionRecord:
    """Interlaced level crossings of |X|.

    ``eta[k]`` are down-crossings of epsilon and ``sigma_up[k]`` the
    up-crossings of 2 epsilon in between, so eta[0] <= sigma_up[0] <= eta[1]
    <= ...  Crossings after ``zeta`` are dropped; ``censored`` is 1 when
    that cut through an excursion that the path would have finished.
    """

    epsilon: float
    eta: list[float]
    sigma_up: list[float]
    zeta: float | None
    censored: int = 0
    tau_level: dict[float, float | None] = field(default_factory=dict)

    @property
    def complete(self) -> int:
        """Number of finished 2eps -> eps excursions."""
        return max(len(self.eta) - 1, 0)

    def rows(self, trajectory_index: int):
        for k, t in enumerate(self.eta):
            yield trajectory_index, "eta", k, t, self.epsilon
        for k, t in enumerate(self.sigma_up):
            yield trajectory_index, "sigma", k + 1, t, 2 * self.epsilon
        if self.zeta is not None:
            yield trajectory_index, "zeta", 0, self.zeta, float("nan")
        for lvl, t in sorted(self.tau_level.items()):
            if t is not None:
                yield trajectory_index, "tau", 0, t, lvl

    def interlaced(self) -> bool:
        seq = []
        for k, e in enumerate(self.eta):
            seq.append(e)
            if k < len(self.sigma_up):
                seq.append(self.sigma_up[k])
        return all(a <= b for a, b in zip(seq, seq[1:])) and len(self.sigma_up) in (
            len(self.eta), len(self.eta) - 1)


def excursions(xpath, epsilon: float, r2path=None, r2cap: float | None = None,
               T: float = 1.0, levels=()) -> ExcursionRecord:
    """Excursion ladder of |X| between epsilon and 2 epsilon.

    ``r2path`` is in physical time; zeta = first s with |r2(sT)| >= r2cap
    is reported in the scaled units of ``xpath``.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be > 0")
    p = _as_path(xpath)
    t, ax = p.times, np.abs(p.values)
    zeta = None
    if r2path is not None and r2cap is not None:
        q = _as_path(r2path, "r2")
        z = hitting_time(q, r2cap, "absolute")
        zeta = None if z is None else z / T
    down = ax - epsilon
    up = ax - 2 * epsilon
    eta, sig = [], []
    censored = 0
    i = 0
    want_down = True
    while True:
        if want_down:
            tc, ic = _first_crossing(t, down, i, -1)
        else:
            tc, ic = _first_crossing(t, up, i, 1)
        if tc is None:
            break
        if zeta is not None and tc > zeta:
            censored = 1
            break
        (eta if want_down else sig).append(tc)
        want_down = not want_down
        i = ic
    taus = {float(lvl): hitting_time(p, lvl, "absolute") for lvl in levels}
    return ExcursionRecord(epsilon, eta, sig, zeta, censored, taus)


def running_sup(path, window=None) -> float:
    """max |x| over grid points with time in ``window`` = (a, b)."""
    p = _as_path(path)
    if window is None:
        return float(np.max(np.abs(p.values)))
    a, b = (p.times[0], window) if np.ndim(window) == 0 else window
    keep = (p.times >= a) & (p.times <= b * (1 + 1e-12))
    if not keep.any():
        raise ValueError("window contains no grid points")
    return float(np.max(np.abs(p.values[keep])))
