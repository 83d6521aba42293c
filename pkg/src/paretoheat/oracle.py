"""Brute-force reference computations used to validate the adjoint-based solvers.

Nothing here calls the adjoint module: the dense map is built from unit
impulses through the forward solver, the minimizer solves normal equations
with a dense factorization, and gradients are central differences of the
cost.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .functionals import ProblemSpec, SpecError, blended_cost
from .grid import SpatialGrid, TimeGrid
from .models import Linear, forward_linear

DENSE_LIMIT = 2000
FD_LIMIT = 5000


def control_dofs(grid: SpatialGrid, time: TimeGrid) -> int:
    return grid.omega_index.size * time.nt


def to_vector(grid: SpatialGrid, v: np.ndarray) -> np.ndarray:
    return np.asarray(v)[:, grid.omega_index].ravel()


def from_vector(grid: SpatialGrid, time: TimeGrid, x: np.ndarray) -> np.ndarray:
    v = np.zeros((time.nt, grid.size))
    v[:, grid.omega_index] = np.asarray(x).reshape(time.nt, -1)
    return v


@dataclass(frozen=True, eq=False)
class DenseAffineMap:
    """``u(T) = matrix @ to_vector(v) + offset`` for the linear model."""

    matrix: np.ndarray
    offset: np.ndarray

    def apply(self, grid: SpatialGrid, v: np.ndarray) -> np.ndarray:
        return self.matrix @ to_vector(grid, v) + self.offset


def assemble_dense(spec: ProblemSpec) -> DenseAffineMap:
    if not isinstance(spec.model, Linear):
        raise SpecError("dense assembly needs the linear model")
    g, t = spec.grid, spec.time
    ndof = control_dofs(g, t)
    if ndof > DENSE_LIMIT:
        raise SpecError(f"{ndof} control unknowns exceed the dense limit {DENSE_LIMIT}")
    offset = forward_linear(g, t, spec.u0)[-1]
    zero = np.zeros(g.size)
    cols = np.empty((g.size, ndof))
    for j in range(ndof):
        e = np.zeros(ndof)
        e[j] = 1.0
        cols[:, j] = forward_linear(g, t, zero, from_vector(g, t, e))[-1]
    return DenseAffineMap(cols, offset)


def dense_minimize(spec: ProblemSpec, dmap: DenseAffineMap | None = None) -> np.ndarray:
    """Global minimizer of J_alpha for the linear model from the normal equations."""
    if not spec.mu > 0:
        raise SpecError("dense_minimize needs mu > 0")
    g, t = spec.grid, spec.time
    dmap = assemble_dense(spec) if dmap is None else dmap
    a = spec.alpha
    u1T, u2T = spec.targets
    # J_alpha(x) = 1/2 (Mx + b)^T D (Mx + b) - (Mx + b)^T D c + const + mu/2 x^T K x
    w1 = a * g.weights * g.o1
    w2 = (1 - a) * g.weights * g.o2
    D = w1 + w2
    Dc = w1 * u1T + w2 * u2T
    M, b = dmap.matrix, dmap.offset
    ctrl_w = t.dt * np.tile(g.weights[g.omega_index], t.nt)
    H = M.T @ (D[:, None] * M) + spec.mu * np.diag(ctrl_w)
    rhs = M.T @ (Dc - D * b)
    x = sla.solve(H, rhs, assume_a="pos")
    return from_vector(g, t, x)


def fd_gradient(spec: ProblemSpec, v: np.ndarray, eps: float = 1e-5) -> np.ndarray:
    """Central-difference gradient of J_alpha, returned as a control-space Riesz representative."""
    g, t = spec.grid, spec.time
    ndof = control_dofs(g, t)
    if ndof > FD_LIMIT:
        raise SpecError(f"{ndof} control unknowns exceed the finite-difference limit; use directional_derivatives")
    x = to_vector(g, v)
    out = np.empty(ndof)
    for j in range(ndof):
        xp = x.copy()
        xm = x.copy()
        xp[j] += eps
        xm[j] -= eps
        out[j] = (blended_cost(spec, from_vector(g, t, xp)) - blended_cost(spec, from_vector(g, t, xm))) / (2 * eps)
    ctrl_w = t.dt * np.tile(g.weights[g.omega_index], t.nt)
    return from_vector(g, t, out / ctrl_w)


def directional_derivatives(spec: ProblemSpec, v: np.ndarray, directions, eps: float = 1e-5) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    vals = []
    for d in directions:
        jp = blended_cost(spec, v + eps * d)
        jm = blended_cost(spec, v - eps * d)
        vals.append((jp - jm) / (2 * eps))
    return np.array(vals)
