"""Projected-gradient solver with Armijo backtracking for the control problem.

Iterates u <- clip(u - s g) where g = r + b0 u is the reduced gradient from
the adjoint solve (plus (u - u_ref) in adapted mode).  Stationarity is
certified by the variational-inequality residual over the control box and,
when b0 > 0, by the fixed-point mismatch against clip(-r/b0).
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Optional

import numpy as np

from .adjoint import solve_adjoint
from .errors import TumorOcpError
from .forward import solve_forward
from .grid import Grid, TimeMesh, inner_Q, norm_Q
from .objective import CostBreakdown, adapted_cost, cost, reduced_gradient
from .params import InitialData, ModelParams, Targets
from .potential import Potential


@dataclass(frozen=True)
class Box:
    """Nodewise control bounds, scalars or (n_steps+1, n_nodes) arrays."""

    lower: float | np.ndarray
    upper: float | np.ndarray

    def __post_init__(self):
        if np.any(np.asarray(self.lower) > np.asarray(self.upper)):
            raise ValueError("control bounds are inverted (lower > upper)")

    def clip(self, u: np.ndarray) -> np.ndarray:
        return np.clip(u, self.lower, self.upper)

    def contains(self, u: np.ndarray, tol: float = 0.0) -> bool:
        return bool(np.all(u >= np.asarray(self.lower) - tol)
                    and np.all(u <= np.asarray(self.upper) + tol))


def project_box(u_raw: np.ndarray, box: Box) -> np.ndarray:
    return box.clip(u_raw)


def vi_residual(grid: Grid, tmesh: TimeMesh, gradient: np.ndarray,
                u: np.ndarray, box: Box, n_samples: int = 8,
                rng: Optional[np.random.Generator] = None) -> float:
    """min over sampled admissible v of <gradient, v - u>_{L2(Q)}.

    The exact box minimizer (lower where gradient > 0, upper where < 0,
    v = u where it vanishes) is always among the samples, so a value
    >= -tol certifies discrete first-order optimality.
    """
    lower = np.broadcast_to(np.asarray(box.lower, dtype=float), u.shape)
    upper = np.broadcast_to(np.asarray(box.upper, dtype=float), u.shape)
    v_star = np.where(gradient > 0, lower, np.where(gradient < 0, upper, u))
    best = inner_Q(grid, tmesh, gradient, v_star - u)
    if n_samples > 0:
        rng = rng or np.random.default_rng(0)
        for _ in range(n_samples):
            v = lower + rng.random(u.shape) * (upper - lower)
            best = min(best, inner_Q(grid, tmesh, gradient, v - u))
    return best


def clamp_mismatch(r: np.ndarray, u: np.ndarray, b0: float, box: Box) -> float:
    """sup-norm distance of u from the bang-bang/interior clamp of -r/b0."""
    if b0 == 0:
        raise ValueError("clamp diagnostic undefined for b0 = 0")
    return float(np.max(np.abs(u - box.clip(-r / b0))))


def adapted_clamp_mismatch(r: np.ndarray, u: np.ndarray, b0: float, box: Box,
                           u_ref: np.ndarray) -> float:
    """Fixed-point mismatch for the adapted cost: clip((u_ref - r)/(1+b0)).

    Stationarity of the adapted gradient r + b0 u + (u - u_ref) over the box
    characterizes the optimum as this clamp, the adapted analogue of the
    plain clip(-r/b0) formula.
    """
    return float(np.max(np.abs(u - box.clip((u_ref - r) / (1.0 + b0)))))


@dataclass
class OptimizeOptions:
    max_iters: int = 200
    vi_tol: float = 1e-6
    clamp_tol: float = 1e-5
    stag_tol: float = 1e-12
    armijo_c1: float = 1e-4
    bt_factor: float = 0.5
    step_init: float = 1.0
    step_min: float = 1e-14
    step_max: float = 1e8
    n_vi_samples: int = 8
    rng_seed: int = 0
    lin_tol: float = 1e-12
    n_newton: int = 1


@dataclass
class OptimizeReport:
    iterations: int = 0
    cost_history: list = dc_field(default_factory=list)
    vi_residual: float = np.nan
    clamp_mismatch: float = np.nan
    grad_norm: float = np.nan
    step_sizes: list = dc_field(default_factory=list)
    converged: bool = False
    reason: str = ""


@dataclass
class ControlProblem:
    """Reduced-cost evaluation bundle: forward + cost (+ adjoint gradient)."""

    params: ModelParams
    grid: Grid
    tmesh: TimeMesh
    pot: Potential
    initial: InitialData
    targets: Targets
    box: Box
    mode: str = "plain"            # plain | adapted
    u_ref: Optional[np.ndarray] = None
    lin_tol: float = 1e-12
    n_newton: int = 1

    def __post_init__(self):
        if self.mode not in ("plain", "adapted"):
            raise ValueError(f"unknown problem mode {self.mode!r}")
        if self.mode == "adapted" and self.u_ref is None:
            raise ValueError("adapted mode requires u_ref")

    def state(self, u):
        return solve_forward(self.params, self.grid, self.tmesh, u,
                             self.initial, self.pot, lin_tol=self.lin_tol,
                             n_newton=self.n_newton)

    def breakdown(self, state, u) -> CostBreakdown:
        if self.mode == "adapted":
            return adapted_cost(self.params, state, u, self.targets, self.u_ref)
        return cost(self.params, state, u, self.targets)

    def cost(self, u) -> float:
        return self.breakdown(self.state(u), u).total

    def gradient(self, state, u) -> np.ndarray:
        adj = solve_adjoint(self.params, self.grid, self.tmesh, self.pot,
                            state, self.targets, lin_tol=self.lin_tol)
        return reduced_gradient(self.params, adj, u, mode=self.mode,
                                u_ref=self.u_ref), adj


def _certificate(problem: ControlProblem, opts: OptimizeOptions,
                 report: OptimizeReport, grad, adj, u, rng) -> bool:
    """Refresh the stationarity certificate in the report; True if it holds.

    Convergence requires the variational-inequality residual bound and, when
    b0 > 0, the sup-norm fixed-point bound against clip(-r/b0); the latter is
    the sharper certificate and is part of the converged contract.
    """
    g_obj, tm = problem.grid, problem.tmesh
    gnorm = norm_Q(g_obj, tm, grad)
    vi = vi_residual(g_obj, tm, grad, u, problem.box,
                     n_samples=opts.n_vi_samples, rng=rng)
    report.vi_residual = vi
    report.grad_norm = gnorm
    ok = vi >= -opts.vi_tol * (1.0 + gnorm)
    if problem.mode == "adapted":
        cm = adapted_clamp_mismatch(adj.r, u, problem.params.b0, problem.box,
                                    problem.u_ref)
        report.clamp_mismatch = cm
        ok = ok and cm <= opts.clamp_tol * (1.0 + float(np.max(np.abs(u))))
    elif problem.params.b0 > 0:
        cm = clamp_mismatch(adj.r, u, problem.params.b0, problem.box)
        report.clamp_mismatch = cm
        ok = ok and cm <= opts.clamp_tol * (1.0 + float(np.max(np.abs(u))))
    return ok


def optimize(problem: ControlProblem, u0: np.ndarray,
             opts: Optional[OptimizeOptions] = None):
    """Projected gradient with Armijo backtracking and BB initial steps.

    Returns (u, state, adjoint, report).  The cost history is nonincreasing
    by construction; a non-monotone accepted step raises.
    """
    opts = opts or OptimizeOptions()
    g_obj, tm = problem.grid, problem.tmesh
    rng = np.random.default_rng(opts.rng_seed)
    report = OptimizeReport()

    u = project_box(np.asarray(u0, dtype=float), problem.box)
    state = problem.state(u)
    bd = problem.breakdown(state, u)
    J = bd.total
    report.cost_history.append(bd)
    grad, adj = problem.gradient(state, u)

    prev_u = prev_g = None
    for it in range(opts.max_iters):
        if _certificate(problem, opts, report, grad, adj, u, rng):
            report.converged = True
            report.reason = "certificate_satisfied"
            break

        # Barzilai-Borwein initial step, safeguarded
        step = opts.step_init
        if prev_u is not None:
            du = u - prev_u
            dg = grad - prev_g
            denom = inner_Q(g_obj, tm, du, dg)
            if denom > 0:
                step = inner_Q(g_obj, tm, du, du) / denom
        step = float(np.clip(step, opts.step_min, opts.step_max))

        accepted = False
        while step >= opts.step_min:
            u_try = project_box(u - step * grad, problem.box)
            state_try = problem.state(u_try)
            bd_try = problem.breakdown(state_try, u_try)
            decrease_model = inner_Q(g_obj, tm, grad, u_try - u)
            if bd_try.total <= J + opts.armijo_c1 * decrease_model:
                accepted = True
                break
            step *= opts.bt_factor
        if not accepted:
            report.reason = "line_search_failure"
            break
        if bd_try.total > J:
            raise TumorOcpError("accepted step increased the cost")

        rel_decrease = (J - bd_try.total) / max(abs(J), 1e-300)
        prev_u, prev_g = u, grad
        u, state, bd, J = u_try, state_try, bd_try, bd_try.total
        report.cost_history.append(bd)
        report.step_sizes.append(step)
        report.iterations = it + 1
        grad, adj = problem.gradient(state, u)

        if rel_decrease < opts.stag_tol:
            report.converged = _certificate(problem, opts, report, grad, adj,
                                            u, rng)
            report.reason = ("certificate_satisfied" if report.converged
                             else "stagnation")
            break
    else:
        # budget exhausted; refresh the certificate at the final iterate
        report.converged = _certificate(problem, opts, report, grad, adj,
                                        u, rng)
        report.reason = ("certificate_satisfied" if report.converged
                         else "max_iters")

    return u, state, adj, report
