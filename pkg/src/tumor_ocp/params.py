"""Model parameters, tracking targets and initial data."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .grid import Grid, TimeMesh


@dataclass(frozen=True)
class ModelParams:
    """Coefficients of the state system and the cost functional.

    alpha >= 0 selects the relaxed (alpha > 0) or limit (alpha = 0) system;
    beta and the proliferation constant P must be strictly positive; the cost
    weights b0..b4 are nonnegative and not all zero.
    """

    alpha: float
    beta: float
    P: float
    b0: float = 0.0
    b1: float = 0.0
    b2: float = 0.0
    b3: float = 0.0
    b4: float = 0.0

    def __post_init__(self):
        if self.alpha < 0:
            raise ValueError("alpha must be >= 0 (alpha = 0 selects the limit system)")
        if not self.beta > 0:
            raise ValueError("beta must be > 0")
        if not self.P > 0:
            raise ValueError("proliferation constant P must be > 0")
        bs = (self.b0, self.b1, self.b2, self.b3, self.b4)
        if any(b < 0 for b in bs):
            raise ValueError("cost weights b0..b4 must be nonnegative")
        if all(b == 0 for b in bs):
            raise ValueError("cost weights b0..b4 must not all be zero")

    @property
    def bs(self) -> tuple[float, ...]:
        return (self.b0, self.b1, self.b2, self.b3, self.b4)


@dataclass
class Targets:
    """Tracking data: trajectories on Q and terminal fields on Omega.

    Trajectory targets have shape (n_steps+1, n_nodes); terminal targets
    have shape (n_nodes,).  Missing entries default to zero.
    """

    phi_Q: Optional[np.ndarray] = None
    sigma_Q: Optional[np.ndarray] = None
    phi_T: Optional[np.ndarray] = None
    sigma_T: Optional[np.ndarray] = None

    def resolved(self, grid: Grid, tmesh: TimeMesh) -> "Targets":
        n = grid.n_nodes
        m = tmesh.n_steps + 1

        def traj(x):
            if x is None:
                return np.zeros((m, n))
            x = np.asarray(x, dtype=float)
            if x.shape == (n,):
                return np.broadcast_to(x, (m, n)).copy()
            if x.shape != (m, n):
                raise ValueError(f"target trajectory has shape {x.shape}, expected {(m, n)}")
            return x

        def final(x):
            if x is None:
                return np.zeros(n)
            x = np.asarray(x, dtype=float)
            if x.shape != (n,):
                raise ValueError(f"terminal target has shape {x.shape}, expected {(n,)}")
            return x

        return Targets(phi_Q=traj(self.phi_Q), sigma_Q=traj(self.sigma_Q),
                       phi_T=final(self.phi_T), sigma_T=final(self.sigma_T))


@dataclass
class InitialData:
    mu0: np.ndarray
    phi0: np.ndarray
    sigma0: np.ndarray

    def validate(self, grid: Grid) -> "InitialData":
        for name in ("mu0", "phi0", "sigma0"):
            v = np.asarray(getattr(self, name), dtype=float)
            if v.shape != (grid.n_nodes,):
                raise ValueError(f"{name} has shape {v.shape}, expected {(grid.n_nodes,)}")
            if not np.all(np.isfinite(v)):
                raise ValueError(f"{name} contains NaN/Inf")
            setattr(self, name, v)
        return self
