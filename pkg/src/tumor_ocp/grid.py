"""Uniform tensor-product mesh with a Neumann Laplacian.

Vertex-centered layout on [0, extent] per axis: ``cells`` intervals give
``cells + 1`` nodes with spacing ``h = extent / cells``.  Homogeneous Neumann
boundaries are closed by mirror ghost nodes, so the second-difference stencil
at a boundary node reads ``(2 f[1] - 2 f[0]) / h^2``.  The operator has exact
zero row sums, constants in its kernel, and is self-adjoint with respect to
the trapezoidal L2 inner product implemented by :meth:`Grid.inner`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import scipy.sparse as sp

from .errors import GridMismatchError


def _laplacian_1d(n_nodes: int, h: float) -> sp.csr_matrix:
    """1D mirror-ghost Neumann second-difference operator (n_nodes >= 2)."""
    main = np.full(n_nodes, -2.0)
    off = np.ones(n_nodes - 1)
    lap = sp.diags([off, main, off], [-1, 0, 1], format="lil")
    # ghost reflection doubles the inner neighbor at both ends
    lap[0, 1] = 2.0
    lap[-1, -2] = 2.0
    return sp.csr_matrix(lap / h**2)


@dataclass(frozen=True)
class Grid:
    extents: tuple[float, ...]
    cells: tuple[int, ...]

    def __post_init__(self):
        if not 1 <= len(self.cells) <= 3:
            raise ValueError(f"dim must be 1, 2 or 3, got {len(self.cells)}")
        if len(self.extents) != len(self.cells):
            raise ValueError("extents and cells must have the same length")
        if any(c < 1 for c in self.cells):
            raise ValueError("cells must be positive on every axis")
        if any(not (e > 0) for e in self.extents):
            raise ValueError("extent must be positive on every axis")
        object.__setattr__(self, "_cache", {})

    @property
    def dim(self) -> int:
        return len(self.cells)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(c + 1 for c in self.cells)

    @property
    def n_nodes(self) -> int:
        return int(np.prod(self.shape))

    @property
    def h(self) -> tuple[float, ...]:
        return tuple(e / c for e, c in zip(self.extents, self.cells))

    @property
    def volume(self) -> float:
        return float(np.prod(self.extents))

    def axis_coords(self, axis: int) -> np.ndarray:
        return np.linspace(0.0, self.extents[axis], self.shape[axis])

    def meshgrid(self) -> list[np.ndarray]:
        """Node coordinates per axis, each flattened row-major to n_nodes."""
        grids = np.meshgrid(*[self.axis_coords(a) for a in range(self.dim)],
                            indexing="ij")
        return [g.ravel() for g in grids]

    @property
    def weights(self) -> np.ndarray:
        """Trapezoidal quadrature weight per node (sums to |Omega|)."""
        cached = self._cache.get("weights")
        if cached is None:
            w = np.array([1.0])
            for ax in range(self.dim):
                w_ax = np.full(self.shape[ax], self.h[ax])
                w_ax[0] *= 0.5
                w_ax[-1] *= 0.5
                w = np.multiply.outer(w, w_ax)
            cached = w.ravel()
            self._cache["weights"] = cached
        return cached

    @property
    def laplacian(self) -> sp.csr_matrix:
        """Sparse Neumann Laplacian on flattened (row-major) node vectors."""
        cached = self._cache.get("laplacian")
        if cached is None:
            terms = []
            for ax in range(self.dim):
                ops = [sp.identity(n, format="csr") for n in self.shape]
                ops[ax] = _laplacian_1d(self.shape[ax], self.h[ax])
                term = ops[0]
                for op in ops[1:]:
                    term = sp.kron(term, op, format="csr")
                terms.append(term)
            cached = sp.csr_matrix(sum(terms))
            self._cache["laplacian"] = cached
        return cached

    # -- discrete calculus on raw value arrays ------------------------------

    def apply_laplacian(self, values: np.ndarray) -> np.ndarray:
        return self.laplacian @ values

    def inner(self, a: np.ndarray, b: np.ndarray) -> float:
        return float(np.dot(a * self.weights, b))

    def l2(self, a: np.ndarray) -> float:
        return math.sqrt(max(self.inner(a, a), 0.0))

    def grad_sq(self, values: np.ndarray) -> float:
        """Squared L2 norm of the forward-difference gradient."""
        v = values.reshape(self.shape)
        total = 0.0
        for ax in range(self.dim):
            d = np.diff(v, axis=ax) / self.h[ax]
            w = np.array([1.0])
            for a2 in range(self.dim):
                if a2 == ax:
                    w_ax = np.full(self.cells[a2], self.h[a2])
                else:
                    w_ax = np.full(self.shape[a2], self.h[a2])
                    w_ax[0] *= 0.5
                    w_ax[-1] *= 0.5
                w = np.multiply.outer(w, w_ax)
            total += float(np.sum(d * d * w))
        return total

    def norms(self, values: np.ndarray) -> "FieldNorms":
        l2sq = self.inner(values, values)
        h1 = math.sqrt(max(l2sq + self.grad_sq(values), 0.0))
        return FieldNorms(L2=math.sqrt(max(l2sq, 0.0)), H1=h1,
                          Linf=float(np.max(np.abs(values))) if values.size else 0.0)


class FieldNorms(NamedTuple):
    L2: float
    H1: float
    Linf: float


@dataclass(frozen=True)
class Field:
    """One time slice of a grid function."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.grid.n_nodes,):
            raise GridMismatchError(
                f"field has {v.shape} values for a grid with {self.grid.n_nodes} nodes")
        object.__setattr__(self, "values", v)
        v.setflags(write=False)

    def check_finite(self) -> "Field":
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field contains NaN/Inf values")
        return self


def _require_same_grid(g: Grid, *fields: Field) -> None:
    for f in fields:
        if f.grid is not g and f.grid != g:
            raise GridMismatchError("field does not live on the given grid")


def neumann_laplacian_apply(g: Grid, f: Field) -> Field:
    _require_same_grid(g, f)
    return Field(g, g.apply_laplacian(f.values)).check_finite()


def inner(g: Grid, a: Field, b: Field) -> float:
    _require_same_grid(g, a, b)
    return g.inner(a.values, b.values)


def norms(g: Grid, f: Field) -> FieldNorms:
    _require_same_grid(g, f)
    return g.norms(f.values)


@dataclass(frozen=True)
class TimeMesh:
    T: float
    n_steps: int

    def __post_init__(self):
        if not self.T > 0:
            raise ValueError("final time T must be positive")
        if self.n_steps < 1:
            raise ValueError("n_steps must be a positive integer")

    @property
    def tau(self) -> float:
        return self.T / self.n_steps

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.T, self.n_steps + 1)

    @property
    def weights(self) -> np.ndarray:
        """Trapezoidal quadrature weights over [0, T] at the slice times."""
        w = np.full(self.n_steps + 1, self.tau)
        w[0] *= 0.5
        w[-1] *= 0.5
        return w


# -- space-time helpers on trajectories (arrays of shape (n_steps+1, n)) ----

def inner_Q(grid: Grid, tmesh: TimeMesh, a: np.ndarray, b: np.ndarray) -> float:
    """L2(Q) inner product by trapezoid-in-time of discrete L2(Omega)."""
    per_slice = (a * b) @ grid.weights
    return float(np.dot(tmesh.weights, per_slice))


def norm_Q(grid: Grid, tmesh: TimeMesh, a: np.ndarray) -> float:
    return math.sqrt(max(inner_Q(grid, tmesh, a, a), 0.0))


def norm_Linf_L2(grid: Grid, a: np.ndarray) -> float:
    return float(np.max([grid.l2(s) for s in a]))


def norm_L2_H1(grid: Grid, tmesh: TimeMesh, a: np.ndarray) -> float:
    vals = [grid.norms(s).H1 ** 2 for s in a]
    return math.sqrt(max(float(np.dot(tmesh.weights, vals)), 0.0))
