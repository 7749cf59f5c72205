"""Exponential pseudo-spectral solver for the full and amplitude systems."""
from .grid import (
    CarrierNotPeriodic,
    Grid,
    GridMismatch,
    Profile,
    SpectralField,
    check_carriers,
    constant,
    cospack,
    fft,
    gaussian,
    ifft,
    parse_profile,
    plateau,
    tent,
)
from .kernels import BACKEND
from .propagator import Propagator, PropagatorOverflow, linear_propagator, phi1, phi2
from .reconstruct import initial_amplitudes, reconstruct, slow_coordinates, sup_error, synthesize_initial
from .stepping import (
    NonlinearTerm,
    SimConfig,
    SolverDivergence,
    SpectralSystem,
    Snapshot,
    Trajectory,
    iterate,
    simulate,
    step,
)

__all__ = [
    "BACKEND",
    "CarrierNotPeriodic",
    "Grid",
    "GridMismatch",
    "NonlinearTerm",
    "Profile",
    "Propagator",
    "PropagatorOverflow",
    "SimConfig",
    "Snapshot",
    "SolverDivergence",
    "SpectralField",
    "SpectralSystem",
    "Trajectory",
    "check_carriers",
    "constant",
    "cospack",
    "fft",
    "gaussian",
    "ifft",
    "initial_amplitudes",
    "iterate",
    "linear_propagator",
    "parse_profile",
    "phi1",
    "phi2",
    "plateau",
    "reconstruct",
    "simulate",
    "slow_coordinates",
    "step",
    "sup_error",
    "synthesize_initial",
    "tent",
]
