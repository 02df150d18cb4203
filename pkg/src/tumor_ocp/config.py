"""Run configuration: dotted key = value files, validation, and builders.

The format is plain text, one ``section.key = value`` per line, ``#``
comments, optional ``[section]`` headers that prefix the following keys.
Unknown keys are rejected so typos cannot silently fall back to defaults.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field as dc_field

import numpy as np

from .errors import ConfigError
from .forward import solve_forward
from .grid import Grid, TimeMesh
from .optimize import Box
from .params import InitialData, ModelParams, Targets
from .potential import Potential, regular_quartic, zero_potential
from .snapshots import read_field


def _parse_bool(s: str) -> bool:
    if s.lower() in ("1", "true", "yes", "on"):
        return True
    if s.lower() in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


# key -> (converter, default-as-string, help)
_SCHEMA: dict[str, tuple] = {
    "grid.cells": (str, "64", "comma-separated cells per axis (1-3 axes)"),
    "grid.extent": (str, "1.0", "comma-separated domain length per axis"),
    "time.t_final": (float, "0.5", "final time T > 0"),
    "time.n_steps": (int, "100", "number of time steps"),
    "model.alpha": (float, "0.1", "relaxation coefficient, >= 0 (0 = limit system)"),
    "model.beta": (float, "1.0", "viscosity coefficient, > 0"),
    "model.p": (float, "0.5", "proliferation constant, > 0"),
    "model.b0": (float, "0.001", "control-energy weight"),
    "model.b1": (float, "1.0", "phi tracking weight on Q"),
    "model.b2": (float, "0.0", "phi terminal tracking weight"),
    "model.b3": (float, "1.0", "sigma tracking weight on Q"),
    "model.b4": (float, "0.0", "sigma terminal tracking weight"),
    "potential.kind": (str, "regular_quartic", "regular_quartic | zero | custom"),
    "potential.coefficients": (str, "", "ascending coefficients for custom kind"),
    "potential.c1": (float, "3.0", "growth constant for the F'' bound"),
    "solver.lin_tol": (float, "1e-12", "linear solve residual tolerance"),
    "solver.newton_tol": (float, "1e-10", "Newton increment tolerance"),
    "solver.n_newton": (int, "1", "Newton iterations per step (1 = semi-implicit)"),
    "init.mu": (str, "constant:0", "initial chemical potential field"),
    "init.phi": (str, "constant:0", "initial order-parameter field"),
    "init.sigma": (str, "constant:0", "initial nutrient field"),
    "target.phi_q": (str, "zero", "phi tracking target on Q"),
    "target.sigma_q": (str, "zero", "sigma tracking target on Q"),
    "target.phi_t": (str, "zero", "phi terminal target"),
    "target.sigma_t": (str, "zero", "sigma terminal target"),
    "target.from_control": (str, "", "generate all targets by a forward run with this control"),
    "control.lower": (float, "-1.0", "lower control bound"),
    "control.upper": (float, "1.0", "upper control bound"),
    "control.initial": (str, "constant:0", "initial control guess (projected)"),
    "opt.max_iters": (int, "200", "projected-gradient iteration budget"),
    "opt.vi_tol": (float, "1e-6", "variational-inequality residual tolerance"),
    "opt.clamp_tol": (float, "1e-5", "clamp fixed-point tolerance (b0 > 0)"),
    "opt.stag_tol": (float, "1e-12", "relative cost stagnation tolerance"),
    "opt.armijo_c1": (float, "1e-4", "Armijo sufficient-decrease constant"),
    "opt.bt_factor": (float, "0.5", "backtracking shrink factor"),
    "opt.mode": (str, "cp", "cp | cp_alpha | cp_tilde"),
    "opt.u_ref_path": (str, "", "reference control for cp_tilde (snapshot or .npy)"),
    "sweep.alphas": (str, "0.2,0.1,0.05,0.025,0.0125", "decreasing alpha ladder"),
    "sweep.experiment": (str, "state", "state | adjoint | control"),
    "fd.n_directions": (int, "10", "random directions for gradcheck"),
    "fd.epsilon": (float, "1e-4", "central-difference step for gradcheck"),
    "run.output_dir": (str, "runs/out", "output directory"),
    "run.snapshot_every": (int, "0", "field snapshot cadence in steps (0 = off)"),
    "run.rng_seed": (int, "0", "seed for test sampling"),
    "run.log_level": (str, "INFO", "logging level"),
}


@dataclass
class RunConfig:
    values: dict[str, object]

    def __getitem__(self, key):
        return self.values[key]

    # -- builders -----------------------------------------------------------

    def build_grid(self) -> Grid:
        cells = tuple(int(c) for c in str(self["grid.cells"]).split(","))
        extent = tuple(float(e) for e in str(self["grid.extent"]).split(","))
        if len(extent) == 1 and len(cells) > 1:
            extent = extent * len(cells)
        try:
            return Grid(extents=extent, cells=cells)
        except ValueError as exc:
            raise ConfigError(f"grid.*: {exc}") from exc

    def build_tmesh(self) -> TimeMesh:
        try:
            return TimeMesh(T=self["time.t_final"], n_steps=self["time.n_steps"])
        except ValueError as exc:
            raise ConfigError(f"time.*: {exc}") from exc

    def build_params(self) -> ModelParams:
        try:
            return ModelParams(alpha=self["model.alpha"], beta=self["model.beta"],
                               P=self["model.p"], b0=self["model.b0"],
                               b1=self["model.b1"], b2=self["model.b2"],
                               b3=self["model.b3"], b4=self["model.b4"])
        except ValueError as exc:
            raise ConfigError(f"model.*: {exc}") from exc

    def build_potential(self) -> Potential:
        kind = self["potential.kind"]
        try:
            if kind == "regular_quartic":
                return regular_quartic(C1=self["potential.c1"])
            if kind == "zero":
                return zero_potential()
            if kind == "custom":
                coeffs = tuple(float(c) for c
                               in str(self["potential.coefficients"]).split(","))
                return Potential(kind="custom", coefficients=coeffs,
                                 C1=self["potential.c1"])
        except ValueError as exc:
            raise ConfigError(f"potential.*: {exc}") from exc
        raise ConfigError(f"potential.kind: unknown kind {kind!r}")

    def build_initial(self, grid: Grid) -> InitialData:
        return InitialData(
            mu0=parse_field_spec(self["init.mu"], grid),
            phi0=parse_field_spec(self["init.phi"], grid),
            sigma0=parse_field_spec(self["init.sigma"], grid),
        ).validate(grid)

    def build_box(self) -> Box:
        lower, upper = self["control.lower"], self["control.upper"]
        if lower > upper:
            raise ConfigError("control bounds: lower must be <= upper")
        return Box(lower=lower, upper=upper)

    def build_control(self, spec: str, grid: Grid, tmesh: TimeMesh) -> np.ndarray:
        field = parse_field_spec(spec, grid)
        return np.broadcast_to(field, (tmesh.n_steps + 1, grid.n_nodes)).copy()

    def build_targets(self, grid: Grid, tmesh: TimeMesh) -> Targets:
        gen = str(self["target.from_control"]).strip()
        if gen:
            u = self.build_control(gen, grid, tmesh)
            state = solve_forward(self.build_params(), grid, tmesh, u,
                                  self.build_initial(grid),
                                  self.build_potential(),
                                  lin_tol=self["solver.lin_tol"],
                                  n_newton=self["solver.n_newton"])
            return Targets(phi_Q=state.phi.copy(), sigma_Q=state.sigma.copy(),
                           phi_T=state.phi[-1].copy(),
                           sigma_T=state.sigma[-1].copy())
        return Targets(
            phi_Q=_target_or_none(self["target.phi_q"], grid),
            sigma_Q=_target_or_none(self["target.sigma_q"], grid),
            phi_T=_target_or_none(self["target.phi_t"], grid),
            sigma_T=_target_or_none(self["target.sigma_t"], grid),
        )

    def build_alphas(self) -> list[float]:
        raw = str(self["sweep.alphas"]).strip()
        if not raw:
            raise ConfigError("sweep.alphas: empty alpha ladder")
        return [float(a) for a in raw.split(",")]

    def resolved_text(self) -> str:
        lines = [f"{k} = {self.values[k]}" for k in sorted(self.values)]
        return "\n".join(lines) + "\n"


def _target_or_none(spec: str, grid: Grid):
    spec = str(spec).strip()
    if spec in ("", "zero", "none"):
        return None
    return parse_field_spec(spec, grid)


def parse_field_spec(spec: str, grid: Grid) -> np.ndarray:
    """Analytic or file-backed spatial field.

    constant:c | cosine:amp,k | gaussian:amp,center,width | file:path | zero
    cosine uses amp * prod_axes cos(k pi x / L) (Neumann-compatible);
    gaussian center and width are relative to the axis extent.
    """
    spec = str(spec).strip()
    coords = grid.meshgrid()
    try:
        if spec == "zero":
            return np.zeros(grid.n_nodes)
        kind, _, args = spec.partition(":")
        if kind == "constant":
            return np.full(grid.n_nodes, float(args))
        if kind == "cosine":
            amp, k = (float(v) for v in args.split(","))
            out = np.full(grid.n_nodes, amp)
            for ax, x in enumerate(coords):
                out *= np.cos(k * np.pi * x / grid.extents[ax])
            return out
        if kind == "gaussian":
            amp, center, width = (float(v) for v in args.split(","))
            rsq = np.zeros(grid.n_nodes)
            for ax, x in enumerate(coords):
                L = grid.extents[ax]
                rsq += ((x - center * L) / (width * L)) ** 2
            return amp * np.exp(-rsq)
        if kind == "file":
            fgrid, values, _, _ = read_field(args)
            if fgrid != grid:
                raise ConfigError(f"{args}: snapshot grid does not match the run grid")
            return values
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"bad field specifier {spec!r}: {exc}") from exc
    raise ConfigError(f"unknown field specifier {spec!r}")


def load_control_reference(path: str, grid: Grid, tmesh: TimeMesh) -> np.ndarray:
    if path.endswith(".npy"):
        u = np.load(path)
        if u.shape != (tmesh.n_steps + 1, grid.n_nodes):
            raise ConfigError(f"{path}: control array has shape {u.shape}, "
                              f"expected {(tmesh.n_steps + 1, grid.n_nodes)}")
        return np.asarray(u, dtype=float)
    fgrid, values, _, _ = read_field(path)
    if fgrid != grid:
        raise ConfigError(f"{path}: snapshot grid does not match the run grid")
    return np.broadcast_to(values, (tmesh.n_steps + 1, grid.n_nodes)).copy()


def parse_config(path: str) -> RunConfig:
    """Reads, type-checks and validates a config file against the schema."""
    values: dict[str, object] = {}
    for key, (conv, default, _help) in _SCHEMA.items():
        values[key] = conv(default)
    try:
        with open(path) as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc

    prefix = ""
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            prefix = line[1:-1].strip()
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, _, value = line.partition("=")
        key = key.strip()
        if prefix and "." not in key:
            key = f"{prefix}.{key}"
        value = value.strip()
        if key not in _SCHEMA:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        conv = _SCHEMA[key][0]
        try:
            values[key] = conv(value)
        except ValueError as exc:
            raise ConfigError(f"{path}:{lineno}: bad value for {key}: {exc}") from exc

    cfg = RunConfig(values=values)
    _validate(cfg)
    return cfg


def _validate(cfg: RunConfig) -> None:
    cfg.build_params()
    cfg.build_grid()
    cfg.build_tmesh()
    cfg.build_box()
    if cfg["solver.lin_tol"] <= 0:
        raise ConfigError("solver.lin_tol must be > 0")
    if cfg["time.n_steps"] < 1:
        raise ConfigError("time.n_steps must be >= 1")
    if cfg["opt.mode"] not in ("cp", "cp_alpha", "cp_tilde"):
        raise ConfigError(f"opt.mode: unknown mode {cfg['opt.mode']!r}")
    if cfg["opt.mode"] == "cp_tilde" and not cfg["opt.u_ref_path"]:
        raise ConfigError("opt.mode = cp_tilde requires opt.u_ref_path")
    if cfg["sweep.experiment"] not in ("state", "adjoint", "control"):
        raise ConfigError(f"sweep.experiment: unknown experiment "
                          f"{cfg['sweep.experiment']!r}")
    alphas = cfg.build_alphas()
    if any(not (0 < a <= 1) for a in alphas):
        raise ConfigError("sweep.alphas: values must lie in (0, 1]")
    if any(b >= a for a, b in zip(alphas, alphas[1:])):
        raise ConfigError("sweep.alphas: ladder must be strictly decreasing")
