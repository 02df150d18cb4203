"""Shared builders for test problems.

All problems are 1D on the unit interval with Neumann-compatible cosine
initial data, small enough for desk-scale runtimes.
"""

from __future__ import annotations

import numpy as np

from tumor_ocp.forward import solve_forward
from tumor_ocp.grid import Grid, TimeMesh
from tumor_ocp.optimize import Box
from tumor_ocp.params import InitialData, ModelParams, Targets
from tumor_ocp.potential import regular_quartic


def cosine_field(grid: Grid, amp: float, k: int = 1) -> np.ndarray:
    """amp * prod_axes cos(k pi x / L), in the Neumann-Laplacian eigenspace."""
    out = np.full(grid.n_nodes, amp)
    for ax, x in enumerate(grid.meshgrid()):
        out = out * np.cos(k * np.pi * x / grid.extents[ax])
    return out


def gaussian_field(grid: Grid, amp: float, center: float, width: float) -> np.ndarray:
    rsq = np.zeros(grid.n_nodes)
    for ax, x in enumerate(grid.meshgrid()):
        L = grid.extents[ax]
        rsq += ((x - center * L) / (width * L)) ** 2
    return amp * np.exp(-rsq)


def constant_control(grid: Grid, tmesh: TimeMesh, field: np.ndarray) -> np.ndarray:
    return np.broadcast_to(field, (tmesh.n_steps + 1, grid.n_nodes)).copy()


def baseline_setup(cells: int = 64, n_steps: int = 100):
    """Smooth tracking problem on the baseline mesh (65 nodes, 100 steps)."""
    grid = Grid(extents=(1.0,), cells=(cells,))
    tmesh = TimeMesh(T=0.5, n_steps=n_steps)
    params = ModelParams(alpha=0.1, beta=1.0, P=0.5,
                         b0=1e-3, b1=1.0, b2=0.5, b3=1.0, b4=0.5)
    pot = regular_quartic()
    initial = InitialData(mu0=cosine_field(grid, 0.1),
                          phi0=cosine_field(grid, 0.2),
                          sigma0=gaussian_field(grid, 0.4, 0.5, 0.35))
    targets = Targets()
    box = Box(lower=-1.0, upper=1.0)
    u = constant_control(grid, tmesh, cosine_field(grid, 0.3))
    return dict(grid=grid, tmesh=tmesh, params=params, pot=pot,
                initial=initial, targets=targets, box=box, u=u)


def inverse_crime_setup(b0: float = 1e-3, cells: int = 32, n_steps: int = 50,
                        T: float = 0.25, n_newton: int = 12,
                        tracking_scale: float = 1.0):
    """Targets generated by a forward run with a known admissible control."""
    grid = Grid(extents=(1.0,), cells=(cells,))
    tmesh = TimeMesh(T=T, n_steps=n_steps)
    params = ModelParams(alpha=0.1, beta=1.0, P=0.5, b0=b0,
                         b1=tracking_scale, b2=0.1 * tracking_scale,
                         b3=tracking_scale, b4=0.1 * tracking_scale)
    pot = regular_quartic()
    initial = InitialData(mu0=cosine_field(grid, 0.1),
                          phi0=cosine_field(grid, 0.2),
                          sigma0=0.3 + cosine_field(grid, 0.1))
    u_dagger = constant_control(grid, tmesh, cosine_field(grid, 0.4))
    state = solve_forward(params, grid, tmesh, u_dagger, initial, pot,
                          n_newton=n_newton, newton_tol=1e-10)
    targets = Targets(phi_Q=state.phi.copy(), sigma_Q=state.sigma.copy(),
                      phi_T=state.phi[-1].copy(), sigma_T=state.sigma[-1].copy())
    box = Box(lower=-1.0, upper=1.0)
    return dict(grid=grid, tmesh=tmesh, params=params, pot=pot,
                initial=initial, targets=targets, box=box, u_dagger=u_dagger,
                n_newton=n_newton)
