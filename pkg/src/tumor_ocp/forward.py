"""Forward solver for the coupled (mu, phi, sigma) state system.

Backward Euler in time with a fully coupled 3n x 3n sparse solve per step.
The cubic term is handled by one Newton linearization about the previous
slice (optionally iterated to full Newton).  The equations per step, with
previous slice (mu, phi, sg) and unknowns (mu+, phi+, sg+):

    (i)   alpha (mu+ - mu)/tau + (phi+ - phi)/tau - Lap mu+ = P (sg+ - mu+) + f_mu
    (ii)  beta (phi+ - phi)/tau - Lap phi+ + F'(phi_L) + F''(phi_L)(phi+ - phi_L)
          - mu+ = f_phi
    (iii) (sg+ - sg)/tau - Lap sg+ = -P (sg+ - mu+) + u_slice

alpha = 0 drops the relaxation mass term and yields the limit system with the
same assembly.  Summing the weighted node totals of (i) and (iii) cancels the
Laplacian (exact zero row sums) and the exchange terms, so the discrete mass
balance holds to machine precision; `conservation_residual` measures it.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import DivergenceError, SolverError
from .grid import Grid, TimeMesh
from .params import InitialData, ModelParams
from .potential import Potential


@dataclass
class SolveReport:
    conservation_residual: float = np.nan
    norm_table: Optional[np.ndarray] = None  # rows: step; see NORM_COLUMNS
    newton_iters_total: int = 0
    lin_residual_max: float = 0.0


NORM_COLUMNS = (
    "time",
    "mu_L2", "mu_H1", "mu_Linf",
    "phi_L2", "phi_H1", "phi_Linf",
    "sigma_L2", "sigma_H1", "sigma_Linf",
    "conservation_residual",
)


@dataclass
class StateTrajectory:
    mu: np.ndarray     # (n_steps+1, n_nodes)
    phi: np.ndarray
    sigma: np.ndarray
    grid: Grid
    tmesh: TimeMesh
    params: ModelParams
    report: SolveReport = dc_field(default_factory=SolveReport)


def _solve_sparse(A: sp.spmatrix, b: np.ndarray, lin_tol: float, step: int) -> np.ndarray:
    lu = spla.splu(sp.csc_matrix(A))
    x = lu.solve(b)
    scale = 1.0 + float(np.max(np.abs(b)))
    res = float(np.max(np.abs(A @ x - b))) / scale
    if res > lin_tol:
        # one round of iterative refinement before giving up
        x = x + lu.solve(b - A @ x)
        res = float(np.max(np.abs(A @ x - b))) / scale
        if res > lin_tol * 100:
            raise SolverError(f"linear solve residual {res:.3e} exceeds tolerance",
                              residual=res, step=step)
    if not np.all(np.isfinite(x)):
        raise DivergenceError("NaN/Inf in linear solve output", step=step)
    return x


def step_state(params: ModelParams, grid: Grid, tau: float,
               current: tuple[np.ndarray, np.ndarray, np.ndarray],
               u_slice: np.ndarray, pot: Potential, *,
               f_mu: Optional[np.ndarray] = None,
               f_phi: Optional[np.ndarray] = None,
               lin_tol: float = 1e-12, n_newton: int = 1,
               newton_tol: float = 1e-10, step_index: int = 0):
    """One backward-Euler step; returns (mu+, phi+, sigma+, info dict)."""
    if not tau > 0:
        raise ValueError("tau must be positive")
    mu, phi, sg = (np.asarray(v, dtype=float) for v in current)
    n = grid.n_nodes
    lap = grid.laplacian
    eye = sp.identity(n, format="csr")
    a, b, P = params.alpha, params.beta, params.P

    phi_lin = phi
    mu_new = mu
    phi_new = phi
    sg_new = sg
    iters = 0
    res_max = 0.0
    for it in range(max(1, n_newton)):
        d2 = pot.d2f(phi_lin)
        fp = pot.df(phi_lin)
        A = sp.bmat([
            [(a / tau + P) * eye - lap, (1.0 / tau) * eye, -P * eye],
            [-eye, (b / tau) * eye + sp.diags(d2) - lap, None],
            [-P * eye, None, (1.0 / tau + P) * eye - lap],
        ], format="csc")
        rhs = np.concatenate([
            a * mu / tau + phi / tau + (f_mu if f_mu is not None else 0.0),
            b * phi / tau - fp + d2 * phi_lin + (f_phi if f_phi is not None else 0.0),
            sg / tau + u_slice,
        ])
        x = _solve_sparse(A, rhs, lin_tol, step_index)
        mu_new, phi_new, sg_new = x[:n], x[n:2 * n], x[2 * n:]
        scale = 1.0 + float(np.max(np.abs(rhs)))
        res_max = max(res_max, float(np.max(np.abs(A @ x - rhs))) / scale)
        iters += 1
        change = float(np.max(np.abs(phi_new - phi_lin)))
        phi_lin = phi_new
        if n_newton > 1 and change < newton_tol:
            break
    return mu_new, phi_new, sg_new, {"newton_iters": iters, "lin_residual": res_max}


def solve_forward(params: ModelParams, grid: Grid, tmesh: TimeMesh,
                  u: np.ndarray, initial: InitialData, pot: Potential, *,
                  forcing_mu: Optional[np.ndarray] = None,
                  forcing_phi: Optional[np.ndarray] = None,
                  forcing_sigma: Optional[np.ndarray] = None,
                  lin_tol: float = 1e-12, n_newton: int = 1,
                  newton_tol: float = 1e-10) -> StateTrajectory:
    """Marches the state system over the full time mesh.

    u, forcing_mu, forcing_phi: (n_steps+1, n_nodes).  The control applied in
    step k is the midpoint average (u[k-1] + u[k]) / 2, which makes the
    discrete control sensitivity match the trapezoidal time quadrature of the
    cost functional at both endpoints; forcings are taken at the implicit
    slice k.  For alpha = 0 the stored mu slice 0 is the value recovered from
    the first elliptic solve, since mu has no initial condition in the limit
    system.
    """
    initial.validate(grid)
    m, n = tmesh.n_steps, grid.n_nodes
    u = np.asarray(u, dtype=float)
    if u.shape != (m + 1, n):
        raise ValueError(f"control has shape {u.shape}, expected {(m + 1, n)}")
    mu = np.empty((m + 1, n))
    phi = np.empty((m + 1, n))
    sg = np.empty((m + 1, n))
    mu[0], phi[0], sg[0] = initial.mu0, initial.phi0, initial.sigma0

    report = SolveReport()
    tau = tmesh.tau
    for k in range(1, m + 1):
        try:
            mu[k], phi[k], sg[k], info = step_state(
                params, grid, tau, (mu[k - 1], phi[k - 1], sg[k - 1]),
                0.5 * (u[k - 1] + u[k])
                + (0.0 if forcing_sigma is None else forcing_sigma[k]), pot,
                f_mu=None if forcing_mu is None else forcing_mu[k],
                f_phi=None if forcing_phi is None else forcing_phi[k],
                lin_tol=lin_tol, n_newton=n_newton, newton_tol=newton_tol,
                step_index=k)
        except SolverError as exc:
            exc.step = k
            raise
        report.newton_iters_total += info["newton_iters"]
        report.lin_residual_max = max(report.lin_residual_max, info["lin_residual"])
    if params.alpha == 0.0:
        # no evolution equation fixes mu(0); report the first elliptic value
        mu[0] = mu[1]

    traj = StateTrajectory(mu=mu, phi=phi, sigma=sg, grid=grid, tmesh=tmesh,
                           params=params, report=report)
    report.conservation_residual = conservation_residual(traj, u)
    report.norm_table = _norm_table(traj, u)
    return traj


def conservation_residual(traj: StateTrajectory, u: np.ndarray) -> float:
    """Discrete mass-balance defect of the accepted trajectory.

    max over n of |total(alpha mu^n + phi^n + sigma^n) - total at 0
    - tau * sum_{k<=n} total(u^k)| / (1 + |total at 0|), where u^k is the
    control value applied in step k (the midpoint average of the adjacent
    trajectory slices), so the identity is scheme-exact.
    """
    g, tm, a = traj.grid, traj.tmesh, traj.params.alpha
    w = g.weights
    totals = (a * traj.mu + traj.phi + traj.sigma) @ w
    u = np.asarray(u)
    u_totals = (0.5 * (u[:-1] + u[1:])) @ w
    supplied = tm.tau * np.cumsum(u_totals)
    defect = totals[1:] - totals[0] - supplied
    return float(np.max(np.abs(defect))) / (1.0 + abs(totals[0])) if defect.size else 0.0


def _norm_table(traj: StateTrajectory, u: np.ndarray) -> np.ndarray:
    g, tm = traj.grid, traj.tmesh
    a = traj.params.alpha
    w = g.weights
    totals = (a * traj.mu + traj.phi + traj.sigma) @ w
    u = np.asarray(u)
    u_totals = (0.5 * (u[:-1] + u[1:])) @ w
    rows = []
    running = 0.0
    for k, t in enumerate(tm.times):
        if k > 0:
            running += tm.tau * u_totals[k - 1]
        defect = abs(totals[k] - totals[0] - running) / (1.0 + abs(totals[0]))
        row = [t]
        for var in (traj.mu, traj.phi, traj.sigma):
            nm = g.norms(var[k])
            row.extend([nm.L2, nm.H1, nm.Linf])
        row.append(defect)
        rows.append(row)
    return np.array(rows)
