"""State space, coupling potentials and the deterministic vector field.

The system is two unit-mass particles on the circle, coupled through a
potential ``V`` of the angle difference::

    dr1 = -V'(theta1 - theta2) dt + dW1
    dr2 =  V'(theta1 - theta2) dt + dW2 - r2 dt
    dtheta1 = r1 dt
    dtheta2 = r2 dt

Only the first two rows carry noise; the friction on ``r2`` has unit
coefficient and is not configurable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from numba import njit

TWO_PI = 2.0 * math.pi

# potential codes understood by the compiled kernels
ZERO, COS, MIXED = 0, 1, 2


@njit(cache=True, inline="always")
def wrap_angle_scalar(x):
    y = x - TWO_PI * math.floor(x / TWO_PI)
    # x slightly below a multiple of 2pi can round up to exactly 2pi
    if y >= TWO_PI:
        y -= TWO_PI
    if y < 0.0:
        y = 0.0
    return y


@njit(cache=True, inline="always")
def dv_scalar(code, x):
    """V'(x) for the built-in potential with the given code."""
    if code == COS:
        return -math.sin(x)
    if code == MIXED:
        return -0.5 * math.sin(x) + 0.25 * math.cos(2.0 * x)
    return 0.0


def wrap_angle(x):
    """Map angles into [0, 2pi)."""
    y = np.mod(x, TWO_PI)
    if np.ndim(y) == 0:
        y = float(y)
        return 0.0 if y >= TWO_PI else y
    y = np.asarray(y, dtype=float)
    y[y >= TWO_PI] = 0.0
    return y


def circle_abs(x):
    """Shortest distance from x to 0 on the circle of length 2pi."""
    y = np.mod(x, TWO_PI)
    return np.minimum(y, TWO_PI - y)


@dataclass(frozen=True)
class PhaseState:
    r1: float
    r2: float
    theta1: float
    theta2: float

    def __post_init__(self):
        vals = (self.r1, self.r2, self.theta1, self.theta2)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError(f"non-finite phase state {vals}")
        object.__setattr__(self, "r1", float(self.r1))
        object.__setattr__(self, "r2", float(self.r2))
        object.__setattr__(self, "theta1", wrap_angle(float(self.theta1)))
        object.__setattr__(self, "theta2", wrap_angle(float(self.theta2)))

    def as_array(self) -> np.ndarray:
        return np.array([self.r1, self.r2, self.theta1, self.theta2])

    @classmethod
    def from_array(cls, a) -> "PhaseState":
        return cls(float(a[0]), float(a[1]), float(a[2]), float(a[3]))


@dataclass(frozen=True)
class Potential:
    """A 2pi-periodic coupling potential with its first two derivatives.

    ``eval``, ``d1`` and ``d2`` accept scalars or numpy arrays.  ``code``
    selects the same function inside the compiled integrators.
    """

    name: str
    eval: Callable
    d1: Callable
    d2: Callable
    code: int


def _zero(x):
    return np.zeros_like(np.asarray(x, dtype=float)) if np.ndim(x) else 0.0


POTENTIALS = {
    "cos": Potential("cos", np.cos, lambda x: -np.sin(x), lambda x: -np.cos(x), COS),
    "zero": Potential("zero", _zero, _zero, _zero, ZERO),
    "mixed": Potential(
        "mixed",
        lambda x: 0.5 * np.cos(x) + 0.125 * np.sin(2.0 * x),
        lambda x: -0.5 * np.sin(x) + 0.25 * np.cos(2.0 * x),
        lambda x: -0.5 * np.cos(x) - 0.5 * np.sin(2.0 * x),
        MIXED,
    ),
}


def get_potential(name: str | Potential) -> Potential:
    if isinstance(name, Potential):
        return name
    try:
        return POTENTIALS[name]
    except KeyError:
        raise ValueError(
            f"unknown potential {name!r}; choose one of {sorted(POTENTIALS)}"
        ) from None


def drift(state: PhaseState, pot: Potential) -> np.ndarray:
    """Deterministic rate of change (dr1, dr2, dtheta1, dtheta2)."""
    pot = get_potential(pot)
    f = float(pot.d1(state.theta1 - state.theta2))
    return np.array([-f, f - state.r2, state.r1, state.r2])


def hamiltonian(state: PhaseState, pot: Potential) -> float:
    pot = get_potential(pot)
    return 0.5 * (state.r1**2 + state.r2**2) + float(pot.eval(state.theta1 - state.theta2))
