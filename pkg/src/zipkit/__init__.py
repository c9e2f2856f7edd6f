"""Numerical bifurcation analysis of the ZIP zinc-uptake model."""
from .model import BufferParams, ModelParams
from .equilibrium import SteadyState, solve_steady_state, steady_branch
from .spectral import HopfPoint, find_hopf_points, spectrum_at
from .normal_form import NormalFormResult, normal_form
from .orbits import FloquetSet, PeriodicOrbit, estimate_orbit, floquet, orbit_branch, shoot_orbit
from .buffering import (EigenPath, TransferSample, critical_p1, eigen_continuation,
                        spectrum_continuation, transfer_function)
from .flow import BACKEND

__version__ = "0.1.0"

__all__ = [
    "ModelParams", "BufferParams", "SteadyState", "solve_steady_state", "steady_branch",
    "HopfPoint", "find_hopf_points", "spectrum_at", "NormalFormResult", "normal_form",
    "PeriodicOrbit", "FloquetSet", "estimate_orbit", "shoot_orbit", "floquet",
    "orbit_branch", "EigenPath", "TransferSample", "eigen_continuation",
    "spectrum_continuation", "critical_p1",
    "transfer_function", "BACKEND",
]
