"""Command-line entry point and run orchestration.

Subcommands: forward | adjoint | optimize | alpha-sweep | gradcheck.
Numerics come from a config file (see config.py); flags cover only the
subcommand, config path, output directory override, and log level.
Exit codes: 0 success, 2 config error, 3 solver error, 4 non-convergence.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .adjoint import solve_adjoint
from .asymptotics import (adjoint_alpha_sweep, control_alpha_continuation,
                          state_alpha_sweep)
from .config import RunConfig, load_control_reference, parse_config
from .errors import ConfigError, NonConvergenceError, SolverError
from .forward import NORM_COLUMNS, solve_forward
from .grid import inner_Q, norm_Q
from .objective import sample_smooth_directions
from .optimize import (ControlProblem, OptimizeOptions, optimize, project_box,
                       vi_residual)
from .snapshots import write_field

log = logging.getLogger("tumor_ocp")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_NONCONVERGENCE = 4


def _fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.17g}"
    return str(x)


def write_csv(path, header, rows) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _prepare_output(cfg: RunConfig, output_dir: str | None) -> Path:
    out = Path(output_dir or cfg["run.output_dir"])
    out.mkdir(parents=True, exist_ok=True)
    (out / "manifest.txt").write_text(cfg.resolved_text())
    return out


def _worker_cap() -> int:
    try:
        return max(1, int(os.environ.get("TUMOR_OCP_THREADS", "1")))
    except ValueError:
        return 1


def _build_common(cfg: RunConfig):
    grid = cfg.build_grid()
    tmesh = cfg.build_tmesh()
    params = cfg.build_params()
    pot = cfg.build_potential()
    initial = cfg.build_initial(grid)
    return grid, tmesh, params, pot, initial


def _write_state_outputs(out: Path, cfg: RunConfig, state) -> None:
    write_csv(out / "state_norms.csv", NORM_COLUMNS, state.report.norm_table)
    every = cfg["run.snapshot_every"]
    if every > 0:
        for k in range(0, state.tmesh.n_steps + 1, every):
            t = state.tmesh.times[k]
            for name, traj in (("mu", state.mu), ("phi", state.phi),
                               ("sigma", state.sigma)):
                write_field(out / f"{name}_{k:06d}.txt", state.grid,
                            traj[k], name, t)


def cmd_forward(cfg: RunConfig, out: Path) -> int:
    grid, tmesh, params, pot, initial = _build_common(cfg)
    u = cfg.build_control(cfg["control.initial"], grid, tmesh)
    state = solve_forward(params, grid, tmesh, u, initial, pot,
                          lin_tol=cfg["solver.lin_tol"],
                          n_newton=cfg["solver.n_newton"],
                          newton_tol=cfg["solver.newton_tol"])
    _write_state_outputs(out, cfg, state)
    summary = {"conservation_residual": state.report.conservation_residual,
               "lin_residual_max": state.report.lin_residual_max}
    (out / "summary.json").write_text(json.dumps(summary, sort_keys=True,
                                                 indent=2) + "\n")
    log.info("forward solve done, conservation residual %.3e",
             state.report.conservation_residual)
    return EXIT_OK


def cmd_adjoint(cfg: RunConfig, out: Path) -> int:
    grid, tmesh, params, pot, initial = _build_common(cfg)
    u = cfg.build_control(cfg["control.initial"], grid, tmesh)
    targets = cfg.build_targets(grid, tmesh)
    state = solve_forward(params, grid, tmesh, u, initial, pot,
                          lin_tol=cfg["solver.lin_tol"],
                          n_newton=cfg["solver.n_newton"])
    adj = solve_adjoint(params, grid, tmesh, pot, state, targets,
                        lin_tol=cfg["solver.lin_tol"])
    rows = []
    for k, t in enumerate(tmesh.times):
        ident = float(np.max(np.abs(adj.w[k] - (adj.p[k] - params.beta * adj.q[k]))))
        rows.append([t, grid.l2(adj.q[k]), grid.l2(adj.p[k]),
                     grid.l2(adj.r[k]), grid.l2(adj.w[k]), ident])
    write_csv(out / "adjoint_norms.csv",
              ("time", "q_L2", "p_L2", "r_L2", "w_L2", "w_identity_error"),
              rows)
    summary = {
        "q_L2Q": norm_Q(grid, tmesh, adj.q),
        "p_L2Q": norm_Q(grid, tmesh, adj.p),
        "r_L2Q": norm_Q(grid, tmesh, adj.r),
        "w_L2Q": norm_Q(grid, tmesh, adj.w),
        "alpha": params.alpha,
    }
    (out / "summary.json").write_text(json.dumps(summary, sort_keys=True,
                                                 indent=2) + "\n")
    return EXIT_OK


def _opt_options(cfg: RunConfig) -> OptimizeOptions:
    return OptimizeOptions(max_iters=cfg["opt.max_iters"],
                           vi_tol=cfg["opt.vi_tol"],
                           clamp_tol=cfg["opt.clamp_tol"],
                           stag_tol=cfg["opt.stag_tol"],
                           armijo_c1=cfg["opt.armijo_c1"],
                           bt_factor=cfg["opt.bt_factor"],
                           rng_seed=cfg["run.rng_seed"],
                           lin_tol=cfg["solver.lin_tol"],
                           n_newton=cfg["solver.n_newton"])


def cmd_optimize(cfg: RunConfig, out: Path) -> int:
    grid, tmesh, params, pot, initial = _build_common(cfg)
    targets = cfg.build_targets(grid, tmesh)
    box = cfg.build_box()
    mode = "plain"
    u_ref = None
    if cfg["opt.mode"] == "cp_tilde":
        mode = "adapted"
        u_ref = load_control_reference(cfg["opt.u_ref_path"], grid, tmesh)
    problem = ControlProblem(params=params, grid=grid, tmesh=tmesh, pot=pot,
                             initial=initial, targets=targets, box=box,
                             mode=mode, u_ref=u_ref,
                             lin_tol=cfg["solver.lin_tol"],
                             n_newton=cfg["solver.n_newton"])
    u0 = project_box(cfg.build_control(cfg["control.initial"], grid, tmesh), box)
    u, state, adj, report = optimize(problem, u0, _opt_options(cfg))

    rows = []
    for it, bd in enumerate(report.cost_history):
        step = report.step_sizes[it - 1] if 1 <= it <= len(report.step_sizes) else 0.0
        rows.append([it, bd.total, bd.j_phiQ, bd.j_phiT, bd.j_sigmaQ,
                     bd.j_sigmaT, bd.j_control, bd.adapted_term, step])
    write_csv(out / "iterations.csv",
              ("iter", "total", "j_phiQ", "j_phiT", "j_sigmaQ", "j_sigmaT",
               "j_control", "adapted_term", "step"), rows)
    np.save(out / "control.npy", u)
    write_field(out / "control_final_slice.txt", grid, u[-1], "u", tmesh.T)
    summary = {
        "iterations": report.iterations,
        "converged": report.converged,
        "reason": report.reason,
        "vi_residual": report.vi_residual,
        "clamp_mismatch": report.clamp_mismatch,
        "grad_norm": report.grad_norm,
        "final_cost": report.cost_history[-1].total,
    }
    (out / "summary.json").write_text(json.dumps(summary, sort_keys=True,
                                                 indent=2) + "\n")
    log.info("optimize: %s after %d iterations, vi residual %.3e",
             report.reason, report.iterations, report.vi_residual)
    if not report.converged:
        return EXIT_NONCONVERGENCE
    return EXIT_OK


def cmd_alpha_sweep(cfg: RunConfig, out: Path) -> int:
    grid, tmesh, params, pot, initial = _build_common(cfg)
    alphas = cfg.build_alphas()
    experiment = cfg["sweep.experiment"]
    u = cfg.build_control(cfg["control.initial"], grid, tmesh)
    targets = cfg.build_targets(grid, tmesh)
    log.info("alpha-sweep experiment=%s, %d rows (worker cap %d)",
             experiment, len(alphas), _worker_cap())
    if experiment == "state":
        rep = state_alpha_sweep(params, grid, tmesh, u, initial, pot, alphas,
                                lin_tol=cfg["solver.lin_tol"])
    elif experiment == "adjoint":
        rep = adjoint_alpha_sweep(params, grid, tmesh, pot, u, initial,
                                  targets, alphas, lin_tol=cfg["solver.lin_tol"])
    else:
        rep = control_alpha_continuation(params, grid, tmesh, pot, initial,
                                         targets, cfg.build_box(), alphas,
                                         opts=_opt_options(cfg),
                                         lin_tol=cfg["solver.lin_tol"])
    names = sorted(rep.columns)
    rows = []
    for i, a in enumerate(rep.alphas):
        rows.append([a] + [rep.columns[n][i] for n in names] + [rep.row_flags[i]])
    write_csv(out / "alpha_sweep.csv", ["alpha"] + names + ["flag"], rows)
    summary = {
        "experiment": experiment,
        "slopes": {n: rep.slopes[n] for n in names},
        "status": {n: rep.status[n] for n in names},
    }
    if experiment == "control":
        summary["reference_cost"] = rep.reference_cost
        summary["reference_converged"] = rep.reference_converged
    (out / "summary.json").write_text(json.dumps(summary, sort_keys=True,
                                                 indent=2) + "\n")
    if any(flag != "ok" for flag in rep.row_flags):
        return EXIT_NONCONVERGENCE
    return EXIT_OK


def cmd_gradcheck(cfg: RunConfig, out: Path) -> int:
    grid, tmesh, params, pot, initial = _build_common(cfg)
    targets = cfg.build_targets(grid, tmesh)
    box = cfg.build_box()
    problem = ControlProblem(params=params, grid=grid, tmesh=tmesh, pot=pot,
                             initial=initial, targets=targets, box=box,
                             lin_tol=cfg["solver.lin_tol"],
                             n_newton=cfg["solver.n_newton"])
    u = project_box(cfg.build_control(cfg["control.initial"], grid, tmesh), box)
    state = problem.state(u)
    grad, _ = problem.gradient(state, u)

    rng = np.random.default_rng(cfg["run.rng_seed"])
    eps = cfg["fd.epsilon"]
    rows = []
    max_rel = 0.0
    dirs = sample_smooth_directions(grid, tmesh, u, box.lower, box.upper,
                                    grad, cfg["fd.n_directions"], rng,
                                    margin=2 * eps)
    for i, d in enumerate(dirs):
        fd = (problem.cost(u + eps * d) - problem.cost(u - eps * d)) / (2 * eps)
        dd = inner_Q(grid, tmesh, grad, d)
        rel = abs(fd - dd) / max(abs(fd), abs(dd), 1e-300)
        max_rel = max(max_rel, rel)
        rows.append([i, dd, fd, rel])
    write_csv(out / "gradcheck.csv",
              ("direction", "adjoint_directional", "fd_directional",
               "rel_error"), rows)
    (out / "summary.json").write_text(json.dumps(
        {"max_rel_error": max_rel, "epsilon": eps}, sort_keys=True,
        indent=2) + "\n")
    print(f"gradcheck: max relative gradient error {max_rel:.6e}")
    if max_rel > 1e-2:
        return EXIT_NONCONVERGENCE
    return EXIT_OK


_COMMANDS = {
    "forward": cmd_forward,
    "adjoint": cmd_adjoint,
    "optimize": cmd_optimize,
    "alpha-sweep": cmd_alpha_sweep,
    "gradcheck": cmd_gradcheck,
}


def run(subcommand: str, config_path: str, output_dir: str | None = None,
        log_level: str | None = None) -> int:
    try:
        cfg = parse_config(config_path)
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    logging.basicConfig(
        level=(log_level or cfg["run.log_level"]).upper(),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    try:
        out = _prepare_output(cfg, output_dir)
    except OSError as exc:
        log.error("cannot create output directory: %s", exc)
        return EXIT_CONFIG
    try:
        return _COMMANDS[subcommand](cfg, out)
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    except SolverError as exc:
        log.error("solver error at step %s: %s", exc.step, exc)
        return EXIT_SOLVER
    except NonConvergenceError as exc:
        log.error("non-convergence: %s", exc)
        return EXIT_NONCONVERGENCE


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="tumor-ocp",
        description="Optimal-control experiments for the relaxed "
                    "Cahn-Hilliard/reaction-diffusion tumor-growth model")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="path to config file")
        p.add_argument("--output-dir", default=None,
                       help="override run.output_dir")
        p.add_argument("--log-level", default=None,
                       help="override run.log_level")
    args = parser.parse_args(argv)
    return run(args.subcommand, args.config, args.output_dir, args.log_level)


if __name__ == "__main__":
    sys.exit(main())
