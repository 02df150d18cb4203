"""Config parsing, validation errors, field specifiers, snapshots."""

import numpy as np
import pytest

from tumor_ocp.config import (load_control_reference, parse_config,
                              parse_field_spec)
from tumor_ocp.errors import ConfigError
from tumor_ocp.grid import Grid, TimeMesh
from tumor_ocp.snapshots import read_field, write_field


def write_cfg(tmp_path, text, name="run.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def test_empty_config_yields_defaults(tmp_path):
    cfg = parse_config(write_cfg(tmp_path, "# nothing but a comment\n"))
    assert cfg["model.beta"] == 1.0
    assert cfg["time.n_steps"] == 100
    grid = cfg.build_grid()
    assert grid.cells == (64,)
    params = cfg.build_params()
    assert params.alpha == 0.1


def test_section_headers_prefix_keys(tmp_path):
    cfg = parse_config(write_cfg(tmp_path, "[model]\nalpha = 0.25\nbeta = 2\n"))
    assert cfg["model.alpha"] == 0.25
    assert cfg["model.beta"] == 2.0


def test_zero_beta_rejected(tmp_path):
    with pytest.raises(ConfigError, match="beta"):
        parse_config(write_cfg(tmp_path, "model.beta = 0\n"))


def test_inverted_control_bounds_rejected(tmp_path):
    with pytest.raises(ConfigError):
        parse_config(write_cfg(tmp_path,
                               "control.lower = 1\ncontrol.upper = -1\n"))


def test_unknown_key_rejected_with_line_number(tmp_path):
    with pytest.raises(ConfigError, match=r":2:.*model\.bogus"):
        parse_config(write_cfg(tmp_path, "model.alpha = 0.1\nmodel.bogus = 3\n"))


def test_bad_value_reports_line(tmp_path):
    with pytest.raises(ConfigError, match=":1:"):
        parse_config(write_cfg(tmp_path, "model.alpha = fast\n"))


def test_missing_file_rejected():
    with pytest.raises(ConfigError):
        parse_config("/nonexistent/nowhere.cfg")


def test_unknown_opt_mode_rejected(tmp_path):
    with pytest.raises(ConfigError, match="opt.mode"):
        parse_config(write_cfg(tmp_path, "opt.mode = newton\n"))


def test_adapted_mode_requires_reference_path(tmp_path):
    with pytest.raises(ConfigError, match="u_ref_path"):
        parse_config(write_cfg(tmp_path, "opt.mode = cp_tilde\n"))


def test_nonmonotone_alpha_ladder_rejected(tmp_path):
    with pytest.raises(ConfigError, match="alphas"):
        parse_config(write_cfg(tmp_path, "sweep.alphas = 0.1,0.2\n"))


def test_field_specifiers():
    grid = Grid(extents=(1.0,), cells=(4,))
    x = grid.axis_coords(0)
    np.testing.assert_array_equal(parse_field_spec("zero", grid), np.zeros(5))
    np.testing.assert_array_equal(parse_field_spec("constant:2.5", grid),
                                  np.full(5, 2.5))
    np.testing.assert_allclose(parse_field_spec("cosine:0.3,2", grid),
                               0.3 * np.cos(2 * np.pi * x), rtol=1e-14)
    gauss = parse_field_spec("gaussian:1.0,0.5,0.2", grid)
    np.testing.assert_allclose(gauss, np.exp(-((x - 0.5) / 0.2) ** 2),
                               rtol=1e-14)
    with pytest.raises(ConfigError):
        parse_field_spec("vortex:1", grid)
    with pytest.raises(ConfigError):
        parse_field_spec("cosine:abc", grid)


def test_snapshot_round_trip(tmp_path):
    grid = Grid(extents=(1.0, 2.0), cells=(3, 4))
    rng = np.random.default_rng(59)
    values = rng.standard_normal(grid.n_nodes)
    path = tmp_path / "field.txt"
    write_field(path, grid, values, "phi", 0.125)
    g2, v2, name, time = read_field(str(path))
    assert g2 == grid
    assert name == "phi" and time == 0.125
    np.testing.assert_array_equal(v2, values)   # 17 digits: exact round trip


def test_field_spec_from_snapshot_file(tmp_path):
    grid = Grid(extents=(1.0,), cells=(6,))
    values = np.linspace(-1, 1, grid.n_nodes)
    path = tmp_path / "init.txt"
    write_field(path, grid, values, "sigma", 0.0)
    np.testing.assert_array_equal(parse_field_spec(f"file:{path}", grid), values)
    other = Grid(extents=(1.0,), cells=(7,))
    with pytest.raises(ConfigError, match="grid"):
        parse_field_spec(f"file:{path}", other)


def test_load_control_reference_npy(tmp_path):
    grid = Grid(extents=(1.0,), cells=(4,))
    tmesh = TimeMesh(T=0.5, n_steps=3)
    u = np.arange(20.0).reshape(4, 5)
    path = tmp_path / "u.npy"
    np.save(path, u)
    np.testing.assert_array_equal(load_control_reference(str(path), grid, tmesh), u)
    bad = np.zeros((2, 5))
    np.save(tmp_path / "bad.npy", bad)
    with pytest.raises(ConfigError, match="shape"):
        load_control_reference(str(tmp_path / "bad.npy"), grid, tmesh)


def test_inverse_crime_targets_from_config(tmp_path):
    cfg = parse_config(write_cfg(tmp_path, "\n".join([
        "grid.cells = 8", "time.t_final = 0.1", "time.n_steps = 5",
        "target.from_control = cosine:0.4,1",
        "init.phi = cosine:0.2,1",
    ]) + "\n"))
    grid = cfg.build_grid()
    tmesh = cfg.build_tmesh()
    targets = cfg.build_targets(grid, tmesh)
    assert targets.phi_Q.shape == (6, 9)
    # generating control reproduces its own targets: zero tracking cost
    from tumor_ocp.forward import solve_forward
    from tumor_ocp.objective import cost
    u = cfg.build_control("cosine:0.4,1", grid, tmesh)
    state = solve_forward(cfg.build_params(), grid, tmesh, u,
                          cfg.build_initial(grid), cfg.build_potential())
    bd = cost(cfg.build_params(), state, np.zeros_like(u), targets)
    assert bd.j_phiQ <= 1e-25 and bd.j_sigmaQ <= 1e-25


def test_resolved_text_is_deterministic(tmp_path):
    path = write_cfg(tmp_path, "model.alpha = 0.05\n")
    assert parse_config(path).resolved_text() == parse_config(path).resolved_text()
