"""Monotone finite-difference solver for the 1-D fractional Stefan problem

    dh/dt + (-Delta)^s Phi(h) = 0,

with tools for selfsimilar profiles, reference solutions and figure runs.
"""

from .gridfield import Bump, Constant, FarField, Field, Grid1D, Riemann, sample_initial
from .nonlinearity import StefanGraph, phi_eval
from .operator import apply, build_local_stencil, build_stencil
from .stepper import RunConfig, SnapshotSeries, cfl_dt, run, step

__version__ = "0.1.0"

__all__ = [
    "Bump", "Constant", "FarField", "Field", "Grid1D", "Riemann", "sample_initial",
    "StefanGraph", "phi_eval", "apply", "build_local_stencil", "build_stencil",
    "RunConfig", "SnapshotSeries", "cfl_dt", "run", "step",
]
