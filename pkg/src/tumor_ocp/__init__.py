"""Optimal control of a relaxed Cahn-Hilliard/reaction-diffusion tumor model.

Forward state solves (relaxed and limit systems), backward adjoint solves in
the w = p - beta q substitution, projected-gradient optimization with the
reduced gradient r + b0 u, and a vanishing-relaxation experiment harness.
"""

__version__ = "0.1.0"

from .errors import (ConfigError, DivergenceError, GridMismatchError,
                     NonConvergenceError, SolverError, TumorOcpError)
from .grid import Field, FieldNorms, Grid, TimeMesh
from .params import InitialData, ModelParams, Targets
from .potential import Potential, regular_quartic, zero_potential

__all__ = [
    "ConfigError", "DivergenceError", "GridMismatchError",
    "NonConvergenceError", "SolverError", "TumorOcpError",
    "Field", "FieldNorms", "Grid", "TimeMesh",
    "InitialData", "ModelParams", "Targets",
    "Potential", "regular_quartic", "zero_potential",
]
