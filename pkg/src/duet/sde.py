"""Time stepping for the coupled system and for its decoupled analogue.

Two schemes are provided:

``euler``
    explicit Euler-Maruyama on the full vector field.
``split``
    kick / rotate / Ornstein-Uhlenbeck / kick.  Momenta get half kicks of
    -+V'(theta1 - theta2) dt/2 around a free rotation of both angles; the
    friction and W2 noise on r2 are applied as the exact OU transition and
    dW1 is added to r1.  With V == 0 the r2 marginal is exact at any dt.

The coupling integral Z is accumulated from exactly the kicks applied to r1,
so ``r1 = r1(0) + W1 + Z`` holds up to rounding at every recorded point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .model import PhaseState, get_potential, dv_scalar, wrap_angle_scalar
from .rng import NoiseStream, W1, W2, channel_keys, normal_at

SCHEMES = {"euler": 0, "split": 1}
TRAJECTORY_HEADER = "t,r1,r2,theta1,theta2,w1,w2,z"


class IntegrationDiverged(RuntimeError):
    def __init__(self, step, master_seed=None, trajectory_index=None):
        self.step = step
        self.master_seed = master_seed
        self.trajectory_index = trajectory_index
        where = "" if master_seed is None else f" (seed={master_seed}, index={trajectory_index})"
        super().__init__(f"integration diverged at step {step}{where}")


class HorizonError(ValueError):
    """Requested time lies beyond the simulated horizon."""


def n_steps(horizon: float, dt: float) -> int:
    """Number of steps covering ``horizon``; exact multiples are not rounded up."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    if horizon < 0:
        raise ValueError("horizon must be nonnegative")
    x = horizon / dt
    n = round(x)
    if abs(x - n) <= 1e-9 * max(1.0, x):
        return int(n)
    return int(math.ceil(x))


@njit(cache=True, inline="always")
def _split_step(r1, r2, t1, t2, f, code, dt, dw1, dw2, ou_a, ou_b, sqdt, damped):
    r1 -= 0.5 * dt * f
    r2 += 0.5 * dt * f
    dz = -0.5 * dt * f
    t1 = wrap_angle_scalar(t1 + r1 * dt)
    t2 = wrap_angle_scalar(t2 + r2 * dt)
    if damped:
        if sqdt > 0.0:
            r2 = ou_a * r2 + ou_b * (dw2 / sqdt)
        else:
            r2 = ou_a * r2
    else:
        r2 += dw2
    r1 += dw1
    f = dv_scalar(code, t1 - t2)
    r1 -= 0.5 * dt * f
    r2 += 0.5 * dt * f
    dz -= 0.5 * dt * f
    return r1, r2, t1, t2, f, dz


@njit(cache=True, inline="always")
def _euler_step(r1, r2, t1, t2, f, code, dt, dw1, dw2, damped):
    n1 = r1 - f * dt + dw1
    if damped:
        n2 = r2 + (f - r2) * dt + dw2
    else:
        n2 = r2 + f * dt + dw2
    t1 = wrap_angle_scalar(t1 + r1 * dt)
    t2 = wrap_angle_scalar(t2 + r2 * dt)
    dz = -f * dt
    f = dv_scalar(code, t1 - t2)
    return n1, n2, t1, t2, f, dz


@njit(cache=True, nogil=True)
def _integrate(r1, r2, t1, t2, code, dt, nsteps, stride, k1, k2, cursor,
               scheme, damped, noisy, rec):
    """Advance one path, writing [r1, r2, t1, t2, w1, w2, z] every ``stride`` steps.

    Returns -1 on success, otherwise the index of the first non-finite step.
    """
    sqdt = math.sqrt(dt)
    ou_a = math.exp(-dt)
    ou_b = math.sqrt(-math.expm1(-2.0 * dt) / 2.0)
    w1 = 0.0
    w2 = 0.0
    z = 0.0
    f = dv_scalar(code, t1 - t2)
    rec[0, 0] = r1
    rec[0, 1] = r2
    rec[0, 2] = t1
    rec[0, 3] = t2
    rec[0, 4] = 0.0
    rec[0, 5] = 0.0
    rec[0, 6] = 0.0
    j = 1
    for k in range(nsteps):
        if noisy:
            dw1 = normal_at(k1, cursor + k) * sqdt
            dw2 = normal_at(k2, cursor + k) * sqdt
        else:
            dw1 = 0.0
            dw2 = 0.0
        if scheme == 1:
            r1, r2, t1, t2, f, dz = _split_step(r1, r2, t1, t2, f, code, dt, dw1, dw2,
                                                ou_a, ou_b, sqdt, damped)
        else:
            r1, r2, t1, t2, f, dz = _euler_step(r1, r2, t1, t2, f, code, dt, dw1, dw2, damped)
        w1 += dw1
        w2 += dw2
        z += dz
        if not (math.isfinite(r1) and math.isfinite(r2)):
            return k
        if (k + 1) % stride == 0:
            rec[j, 0] = r1
            rec[j, 1] = r2
            rec[j, 2] = t1
            rec[j, 3] = t2
            rec[j, 4] = w1
            rec[j, 5] = w2
            rec[j, 6] = z
            j += 1
    return -1


@njit(cache=True, nogil=True)
def _integrate_endpoints(init, keys, code, dt, nsteps, scheme, out):
    """Many independent paths, keeping only the final state, w1 and z."""
    rec = np.empty((2, 7))
    for p in range(init.shape[0]):
        status = _integrate(init[p, 0], init[p, 1], init[p, 2], init[p, 3], code, dt,
                            nsteps, nsteps, keys[p, 0], keys[p, 1], 0, scheme,
                            True, True, rec)
        if status >= 0:
            return p
        for c in range(7):
            out[p, c] = rec[1, c]
    return -1


@njit(cache=True, nogil=True)
def _integrate_analogue(r, th, dt, nsteps, stride, key, cursor, noisy, rec):
    sqdt = math.sqrt(dt)
    ou_a = math.exp(-dt)
    ou_b = math.sqrt(-math.expm1(-2.0 * dt) / 2.0)
    w = 0.0
    rec[0, 0] = r
    rec[0, 1] = th
    rec[0, 2] = 0.0
    j = 1
    for k in range(nsteps):
        dw = normal_at(key, cursor + k) * sqdt if noisy else 0.0
        th = wrap_angle_scalar(th + r * dt)
        r = ou_a * r + ou_b * (dw / sqdt)
        w += dw
        if (k + 1) % stride == 0:
            rec[j, 0] = r
            rec[j, 1] = th
            rec[j, 2] = w
            j += 1
    return -1


def _scheme_code(scheme: str) -> int:
    try:
        return SCHEMES[scheme]
    except KeyError:
        raise ValueError(f"unknown integrator {scheme!r}; choose from {sorted(SCHEMES)}") from None


def _single_step(stepper, state, pot, dt, noise_increments, damped, step_index=0):
    if dt < 0:
        raise ValueError("dt must be nonnegative")
    pot = get_potential(pot)
    dw1, dw2 = (0.0, 0.0) if noise_increments is None else map(float, noise_increments)
    f = dv_scalar(pot.code, state.theta1 - state.theta2)
    if stepper == 1:
        sq = math.sqrt(dt)
        r1, r2, t1, t2, _, _ = _split_step(state.r1, state.r2, state.theta1, state.theta2, f,
                                           pot.code, dt, dw1, dw2, math.exp(-dt),
                                           math.sqrt(-math.expm1(-2.0 * dt) / 2.0), sq, damped)
    else:
        r1, r2, t1, t2, _, _ = _euler_step(state.r1, state.r2, state.theta1, state.theta2, f,
                                           pot.code, dt, dw1, dw2, damped)
    if not all(math.isfinite(v) for v in (r1, r2, t1, t2)):
        raise IntegrationDiverged(step_index)
    return PhaseState(r1, r2, t1, t2)


def step_euler(state: PhaseState, pot, dt: float, noise_increments=None, *, damped=True):
    """One Euler-Maruyama step; ``noise_increments`` are (dW1, dW2)."""
    return _single_step(0, state, pot, dt, noise_increments, damped)


def step_split(state: PhaseState, pot, dt: float, noise_increments=None, *, damped=True):
    """One kick-rotate-OU-kick step.

    ``damped=False`` replaces the OU substep by a plain ``r2 += dW2``; with
    zero noise this is the friction-free Hamiltonian flow.
    """
    return _single_step(1, state, pot, dt, noise_increments, damped)


@dataclass
class Trajectory:
    """Recorded path on a uniform grid.

    ``dt`` is the spacing of the recorded grid; ``step`` is the integrator
    step (they differ when the recording stride is larger than one).
    ``w1``, ``w2`` and ``z`` are accumulated from the first recorded point.
    """

    dt: float
    step: float
    times: np.ndarray
    r1: np.ndarray
    r2: np.ndarray
    theta1: np.ndarray
    theta2: np.ndarray
    w1: np.ndarray
    w2: np.ndarray
    z: np.ndarray

    def __len__(self):
        return self.times.shape[0]

    @property
    def states(self) -> np.ndarray:
        return np.column_stack([self.r1, self.r2, self.theta1, self.theta2])

    def state(self, i: int) -> PhaseState:
        return PhaseState(self.r1[i], self.r2[i], self.theta1[i], self.theta2[i])

    def final_state(self) -> PhaseState:
        return self.state(-1)

    def identity_residual(self) -> float:
        """Max relative violation of r1 = r1(0) + w1 + z."""
        pred = self.r1[0] + self.w1 + self.z
        scale = np.maximum.reduce([np.abs(self.r1), np.abs(self.w1), np.abs(self.z),
                                   np.ones_like(self.r1)])
        return float(np.max(np.abs(self.r1 - pred) / scale))

    def to_csv(self, path, comment: str | None = None) -> None:
        data = np.column_stack([self.times, self.r1, self.r2, self.theta1, self.theta2,
                                self.w1, self.w2, self.z])
        with open(path, "w") as fh:
            if comment:
                fh.write(f"# {comment}\n")
            fh.write(TRAJECTORY_HEADER + "\n")
            np.savetxt(fh, data, delimiter=",", fmt="%.17g")


def simulate(init: PhaseState, pot, horizon: float, dt: float, noise: NoiseStream,
             stride: int = 1, scheme: str = "split", *, damped: bool = True,
             noisy: bool = True) -> Trajectory:
    """Integrate from ``init`` over ``horizon`` time units.

    The step count is rounded up to a multiple of ``stride`` so the recorded
    grid is uniform and contains both endpoints.  Time starts at
    ``noise.cursor * dt`` and the cursor is advanced, so a second call with
    the same stream continues the same Brownian paths.
    """
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    if stride < 1:
        raise ValueError("stride must be >= 1")
    pot = get_potential(pot)
    n = n_steps(horizon, dt)
    n = -(-n // stride) * stride
    rec = np.empty((n // stride + 1, 7))
    start = noise.cursor
    status = _integrate(init.r1, init.r2, init.theta1, init.theta2, pot.code, dt, n, stride,
                        noise.key(W1), noise.key(W2), start, _scheme_code(scheme),
                        damped, noisy, rec)
    if status >= 0:
        raise IntegrationDiverged(start + status, noise.master_seed, noise.trajectory_index)
    noise.cursor += n
    times = (start + stride * np.arange(rec.shape[0])) * dt
    return Trajectory(stride * dt, dt, times, *(np.ascontiguousarray(rec[:, c]) for c in range(7)))


@dataclass
class AnaloguePath:
    dt: float
    times: np.ndarray
    r: np.ndarray
    theta: np.ndarray
    w: np.ndarray


def simulate_analogue(init, horizon: float, dt: float, noise: NoiseStream,
                      stride: int = 1, *, noisy: bool = True) -> AnaloguePath:
    """Decoupled process dr = -r dt + dW, dtheta = r dt.

    ``init`` is ``(r, theta)``.  The driving noise is the W2 channel, so for
    V == 0 and the split scheme this reproduces (r2, theta2) of
    :func:`simulate` bit for bit.
    """
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    r0, th0 = float(init[0]), float(init[1])
    n = n_steps(horizon, dt)
    n = -(-n // stride) * stride
    rec = np.empty((n // stride + 1, 3))
    start = noise.cursor
    _integrate_analogue(r0, wrap_angle_scalar(th0), dt, n, stride, noise.key(W2), start,
                        noisy, rec)
    if not np.all(np.isfinite(rec)):
        raise IntegrationDiverged(start, noise.master_seed, noise.trajectory_index)
    noise.cursor += n
    times = (start + stride * np.arange(rec.shape[0])) * dt
    return AnaloguePath(stride * dt, times, rec[:, 0].copy(), rec[:, 1].copy(), rec[:, 2].copy())


def simulate_endpoints(init: np.ndarray, pot, horizon: float, dt: float, master_seed: int,
                       indices, scheme: str = "split") -> np.ndarray:
    """Final [r1, r2, theta1, theta2, w1, w2, z] of many short paths.

    Row ``p`` is identical to the last row of ``simulate`` with
    ``NoiseStream(master_seed, indices[p])`` and ``init[p]``.
    """
    pot = get_potential(pot)
    init = np.ascontiguousarray(init, dtype=float)
    indices = np.asarray(indices)
    keys = np.column_stack([channel_keys(master_seed, indices, W1),
                            channel_keys(master_seed, indices, W2)])
    init = init.copy()
    init[:, 2:4] = np.mod(init[:, 2:4], 2.0 * math.pi)
    out = np.empty((init.shape[0], 7))
    bad = _integrate_endpoints(init, keys, pot.code, dt, n_steps(horizon, dt),
                               _scheme_code(scheme), out)
    if bad >= 0:
        raise IntegrationDiverged(None, master_seed, int(indices[bad]))
    return out
