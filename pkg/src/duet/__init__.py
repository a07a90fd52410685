"""Two particles on the circle: one driven by noise, one damped and driven.

Simulation of the coupled system, observables read off paths, closed-form
references and an ensemble harness that checks the diffusive behaviour of
the undamped momentum.
"""

from .model import POTENTIALS, PhaseState, Potential, drift, get_potential, hamiltonian
from .rng import NoiseStream
from .sde import (IntegrationDiverged, Trajectory, simulate, simulate_analogue,
                  simulate_endpoints, step_euler, step_split)

__version__ = "0.1.0"

__all__ = [
    "POTENTIALS", "PhaseState", "Potential", "drift", "get_potential", "hamiltonian",
    "NoiseStream", "IntegrationDiverged", "Trajectory", "simulate", "simulate_analogue",
    "simulate_endpoints", "step_euler", "step_split",
]
