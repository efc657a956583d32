"""Simulator for bus-mediated gates on superconducting microwave resonators.

Two distant resonators exchange and entangle single microwave photons
through a common bus resonator and a transmon qutrit.  The package
builds the processor's Hilbert space, integrates the Lindblad master
equation over piecewise-constant control schedules, generates the
state-transfer and controlled-phase schedules, and scores them with
state and average-gate fidelities, cross-checked against closed-form
Jaynes-Cummings solutions.
"""

from .dynamics import (
    ControlKnobs,
    ControlSchedule,
    DeviceParams,
    Segment,
    SolverOptions,
    Trajectory,
    build_dissipators,
    build_hamiltonian,
    evolve,
    lindblad_rhs,
    schrodinger_evolve,
    validate_frame,
)
from .fockspace import (
    DensityMatrix,
    Operator,
    PureState,
    SpaceLayout,
    annihilation,
    basis_state,
    build_space,
    creation,
    identity,
    number,
    qutrit_transition,
)

__all__ = [
    "ControlKnobs", "ControlSchedule", "DensityMatrix", "DeviceParams",
    "Operator", "PureState", "Segment", "SolverOptions", "SpaceLayout",
    "Trajectory", "annihilation", "basis_state", "build_dissipators",
    "build_hamiltonian", "build_space", "creation", "evolve", "identity",
    "lindblad_rhs", "number", "qutrit_transition", "schrodinger_evolve",
    "validate_frame",
]

__version__ = "0.1.0"
