"""Tracking-type cost functional, adapted variant, and reduced gradient.

L2(Q) terms use the trapezoidal rule in time composed with the discrete
L2(Omega) inner product; terminal terms use the final slice.  The reduced
gradient is the L2(Q) Riesz representative r + b0 u, with the extra
(u - u_ref) term in adapted mode.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .adjoint import AdjointTrajectory
from .forward import StateTrajectory
from .grid import Grid, TimeMesh, inner_Q, norm_Q
from .params import ModelParams, Targets


@dataclass
class CostBreakdown:
    j_phiQ: float
    j_phiT: float
    j_sigmaQ: float
    j_sigmaT: float
    j_control: float
    adapted_term: float = 0.0

    @property
    def total(self) -> float:
        return (self.j_phiQ + self.j_phiT + self.j_sigmaQ + self.j_sigmaT
                + self.j_control + self.adapted_term)


def cost(params: ModelParams, state: StateTrajectory, u: np.ndarray,
         targets: Targets) -> CostBreakdown:
    g, tm = state.grid, state.tmesh
    tg = targets.resolved(g, tm)
    d_phi = state.phi - tg.phi_Q
    d_sig = state.sigma - tg.sigma_Q
    d_phi_T = state.phi[-1] - tg.phi_T
    d_sig_T = state.sigma[-1] - tg.sigma_T
    return CostBreakdown(
        j_phiQ=0.5 * params.b1 * inner_Q(g, tm, d_phi, d_phi),
        j_phiT=0.5 * params.b2 * g.inner(d_phi_T, d_phi_T),
        j_sigmaQ=0.5 * params.b3 * inner_Q(g, tm, d_sig, d_sig),
        j_sigmaT=0.5 * params.b4 * g.inner(d_sig_T, d_sig_T),
        j_control=0.5 * params.b0 * inner_Q(g, tm, u, u),
    )


def adapted_cost(params: ModelParams, state: StateTrajectory, u: np.ndarray,
                 targets: Targets, u_ref: np.ndarray) -> CostBreakdown:
    bd = cost(params, state, u, targets)
    d = u - u_ref
    bd.adapted_term = 0.5 * inner_Q(state.grid, state.tmesh, d, d)
    return bd


def sample_smooth_directions(grid: Grid, tmesh: TimeMesh, u: np.ndarray,
                             lower: np.ndarray | float,
                             upper: np.ndarray | float,
                             grad: np.ndarray, n: int,
                             rng: np.random.Generator, *,
                             margin: float = 0.0, eta: float = 0.01,
                             n_modes: int = 3, max_tries: int = 1000):
    """Random smooth admissible perturbation directions for gradient checks.

    Each direction is a sum of ``n_modes`` separable cosine modes (Neumann-
    compatible in space, low frequency in time) with standard-normal
    amplitudes, sup-normalized, and zeroed wherever u sits within ``margin``
    of a bound so that two-sided steps stay admissible.  Directions nearly
    orthogonal to ``grad`` (|<grad, v>| < eta ||grad|| ||v||) are rejected:
    their directional derivative is dominated by floating-point noise and a
    relative comparison against it is meaningless.  The rejection threshold
    is relaxed if sampling keeps failing, so the call always returns.
    """
    coords = grid.meshgrid()
    t = tmesh.times
    gnorm = norm_Q(grid, tmesh, grad)
    lower = np.broadcast_to(np.asarray(lower, dtype=float), u.shape)
    upper = np.broadcast_to(np.asarray(upper, dtype=float), u.shape)
    interior = (u > lower + margin) & (u < upper - margin)
    dirs: list[np.ndarray] = []
    tries = 0
    while len(dirs) < n:
        tries += 1
        if tries > max_tries:
            eta *= 0.5
            tries = 0
        v = np.zeros_like(u)
        for _ in range(n_modes):
            mode = np.full(grid.n_nodes, rng.standard_normal())
            for ax, x in enumerate(coords):
                k = rng.integers(0, 4)
                mode = mode * np.cos(k * np.pi * x / grid.extents[ax])
            kt = rng.integers(0, 4)
            v += np.cos(kt * np.pi * t / tmesh.T)[:, None] * mode[None, :]
        v = np.where(interior, v, 0.0)
        sup = float(np.max(np.abs(v)))
        if sup == 0.0:
            continue
        v /= sup
        vnorm = norm_Q(grid, tmesh, v)
        if vnorm == 0.0 or abs(inner_Q(grid, tmesh, grad, v)) < eta * gnorm * vnorm:
            continue
        dirs.append(v)
    return dirs


def reduced_gradient(params: ModelParams, adjoint: AdjointTrajectory,
                     u: np.ndarray, mode: str = "plain",
                     u_ref: Optional[np.ndarray] = None) -> np.ndarray:
    """Gradient trajectory r + b0 u (+ (u - u_ref) in adapted mode)."""
    grad = adjoint.r + params.b0 * u
    if mode == "adapted":
        if u_ref is None:
            raise ValueError("adapted mode requires u_ref")
        grad = grad + (u - u_ref)
    elif mode != "plain":
        raise ValueError(f"unknown gradient mode {mode!r}")
    return grad
