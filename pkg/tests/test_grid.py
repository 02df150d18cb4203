"""Mesh, Neumann Laplacian, inner products, and norm plumbing."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tumor_ocp.errors import GridMismatchError
from tumor_ocp.grid import (Field, Grid, TimeMesh, inner, inner_Q,
                            neumann_laplacian_apply, norm_L2_H1, norm_Linf_L2,
                            norm_Q, norms)


def random_grid(rng, dim):
    cells = tuple(int(rng.integers(2, 9)) for _ in range(dim))
    extents = tuple(float(rng.uniform(0.5, 2.0)) for _ in range(dim))
    return Grid(extents=extents, cells=cells)


# -- construction and validation --------------------------------------------

def test_grid_basic_metadata():
    g = Grid(extents=(2.0, 1.0), cells=(4, 2))
    assert g.dim == 2
    assert g.shape == (5, 3)
    assert g.n_nodes == 15
    assert g.h == (0.5, 0.5)
    assert g.volume == 2.0


@pytest.mark.parametrize("extents,cells", [
    ((), ()), ((1.0,) * 4, (2,) * 4), ((1.0,), (0,)), ((0.0,), (2,)),
    ((1.0, 1.0), (2,)),
])
def test_grid_rejects_bad_construction(extents, cells):
    with pytest.raises(ValueError):
        Grid(extents=extents, cells=cells)


def test_field_shape_mismatch_raises():
    g = Grid(extents=(1.0,), cells=(4,))
    with pytest.raises(GridMismatchError):
        Field(g, np.zeros(3))


def test_field_grid_mismatch_raises():
    g1 = Grid(extents=(1.0,), cells=(4,))
    g2 = Grid(extents=(1.0,), cells=(5,))
    f = Field(g2, np.zeros(6))
    with pytest.raises(GridMismatchError):
        neumann_laplacian_apply(g1, f)


# -- Laplacian stencil and eigenstructure -----------------------------------

def test_three_node_stencil_example():
    # 3 nodes with h = 1: f = (0, 1, 0) maps to (2, -2, 2)
    g = Grid(extents=(2.0,), cells=(2,))
    f = Field(g, np.array([0.0, 1.0, 0.0]))
    out = neumann_laplacian_apply(g, f)
    np.testing.assert_allclose(out.values, [2.0, -2.0, 2.0], atol=1e-14)


def test_constant_in_kernel_exactly():
    rng = np.random.default_rng(0)
    for dim in (1, 2, 3):
        g = random_grid(rng, dim)
        c = Field(g, np.full(g.n_nodes, 3.7))
        out = neumann_laplacian_apply(g, c)
        scale = 3.7 * 2 * g.dim / min(g.h) ** 2
        assert np.max(np.abs(out.values)) <= 1e-14 * scale


def test_cosine_modes_are_exact_eigenvectors():
    g = Grid(extents=(1.0,), cells=(16,))
    x = g.axis_coords(0)
    h = g.h[0]
    for k in (1, 2, 5):
        f = np.cos(k * np.pi * x)
        lam = -(2.0 - 2.0 * np.cos(k * np.pi * h)) / h**2
        np.testing.assert_allclose(g.apply_laplacian(f), lam * f,
                                   atol=1e-11 * abs(lam))


def test_row_sums_zero_all_dims():
    rng = np.random.default_rng(1)
    for dim in (1, 2, 3):
        g = random_grid(rng, dim)
        rowsum = g.laplacian @ np.ones(g.n_nodes)
        scale = max(1.0 / min(g.h) ** 2, 1.0)
        assert np.max(np.abs(rowsum)) <= 1e-12 * scale


def test_dense_oracle_1d():
    # independent dense assembly with mirror ghosts
    g = Grid(extents=(1.3,), cells=(7,))
    n, h = g.shape[0], g.h[0]
    dense = np.zeros((n, n))
    for i in range(n):
        dense[i, i] = -2.0
        for j in (i - 1, i + 1):
            jj = min(max(j, 0), n - 1)
            if j < 0:
                jj = 1          # mirror ghost
            if j > n - 1:
                jj = n - 2
            dense[i, jj] += 1.0
    dense /= h**2
    np.testing.assert_allclose(g.laplacian.toarray(), dense, atol=1e-13 / h**2)


# -- inner product and norms ------------------------------------------------

def test_inner_of_ones_is_domain_measure():
    rng = np.random.default_rng(2)
    for dim in (1, 2, 3):
        g = random_grid(rng, dim)
        one = Field(g, np.ones(g.n_nodes))
        assert inner(g, one, one) == pytest.approx(g.volume, rel=1e-14)


def test_norms_examples():
    g = Grid(extents=(1.0,), cells=(8,))
    zero = norms(g, Field(g, np.zeros(g.n_nodes)))
    assert zero == (0.0, 0.0, 0.0)
    c = norms(g, Field(g, np.full(g.n_nodes, -2.0)))
    assert c.L2 == pytest.approx(2.0 * math.sqrt(g.volume), rel=1e-14)
    assert c.H1 == pytest.approx(c.L2, rel=1e-14)
    assert c.Linf == 2.0


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000), dim=st.integers(1, 2))
def test_operator_properties_random(seed, dim):
    rng = np.random.default_rng(seed)
    g = random_grid(rng, dim)
    a = rng.standard_normal(g.n_nodes)
    b = rng.standard_normal(g.n_nodes)
    # symmetry of inner and weighted self-adjointness of the Laplacian
    assert g.inner(a, b) == pytest.approx(g.inner(b, a), rel=1e-12, abs=1e-12)
    La, Lb = g.apply_laplacian(a), g.apply_laplacian(b)
    scale = max(abs(g.inner(La, b)), abs(g.inner(a, Lb)), 1.0)
    assert abs(g.inner(La, b) - g.inner(a, Lb)) <= 1e-12 * scale
    # negative semidefiniteness
    assert g.inner(a, La) <= 1e-12 * max(g.inner(a, a), 1.0)
    # H1 >= L2
    nm = g.norms(a)
    assert nm.H1 >= nm.L2


# -- time mesh and space-time norms -----------------------------------------

def test_timemesh_basics():
    tm = TimeMesh(T=0.5, n_steps=10)
    assert tm.tau == pytest.approx(0.05)
    assert tm.times[0] == 0.0 and tm.times[-1] == 0.5
    assert np.sum(tm.weights) == pytest.approx(0.5, rel=1e-14)
    with pytest.raises(ValueError):
        TimeMesh(T=0.0, n_steps=10)
    with pytest.raises(ValueError):
        TimeMesh(T=1.0, n_steps=0)


def test_space_time_norms_on_ones():
    g = Grid(extents=(1.0,), cells=(8,))
    tm = TimeMesh(T=2.0, n_steps=5)
    ones = np.ones((tm.n_steps + 1, g.n_nodes))
    assert inner_Q(g, tm, ones, ones) == pytest.approx(2.0, rel=1e-14)
    assert norm_Q(g, tm, ones) == pytest.approx(math.sqrt(2.0), rel=1e-14)
    assert norm_Linf_L2(g, ones) == pytest.approx(1.0, rel=1e-14)
    assert norm_L2_H1(g, tm, ones) == pytest.approx(math.sqrt(2.0), rel=1e-14)
