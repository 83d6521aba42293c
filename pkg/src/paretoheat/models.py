"""Implicit-Euler state solvers for the linear, semilinear and bilinear heat models.

All steppers share one convention: the control acting on step n -> n+1 is
``v[n]`` (time level n+1, right endpoint), diffusion is implicit and the
semilinear reaction is explicit.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .grid import SpatialGrid, TimeGrid


class SolverError(RuntimeError):
    pass


class IndefiniteStepError(SolverError):
    def __init__(self, level: int, value: float):
        super().__init__(
            f"bilinear step operator is not positive definite at time level {level} "
            f"(1 + dt*v = {value:.3g} <= 0); reduce the control bound or dt"
        )
        self.level = level


@dataclass(frozen=True)
class Linear:
    name = "linear"


@dataclass(frozen=True)
class Semilinear:
    F: Callable[[np.ndarray], np.ndarray]
    dF: Callable[[np.ndarray], np.ndarray]
    d2F: Callable[[np.ndarray], np.ndarray]
    label: str = "custom"
    name = "semilinear"

    def check_derivatives(self, points=None, h: float = 1e-6, tol: float = 1e-4) -> bool:
        s = np.linspace(-3.0, 3.0, 13) if points is None else np.asarray(points, dtype=float)
        fd1 = (self.F(s + h) - self.F(s - h)) / (2 * h)
        fd2 = (self.dF(s + h) - self.dF(s - h)) / (2 * h)
        scale = 1.0 + np.abs(fd1)
        return bool(np.all(np.abs(fd1 - self.dF(s)) <= tol * scale) and np.all(np.abs(fd2 - self.d2F(s)) <= tol * (1.0 + np.abs(fd2))))


@dataclass(frozen=True)
class Bilinear:
    name = "bilinear"


ModelKind = Linear | Semilinear | Bilinear


def zero_reaction() -> Semilinear:
    z = lambda s: np.zeros_like(np.asarray(s, dtype=float))
    return Semilinear(z, z, z, label="zero")


def linear_reaction(c: float = 1.0) -> Semilinear:
    return Semilinear(
        lambda s: c * np.asarray(s, dtype=float),
        lambda s: np.full_like(np.asarray(s, dtype=float), c),
        lambda s: np.zeros_like(np.asarray(s, dtype=float)),
        label=f"linear({c:g})",
    )


def sine_reaction(dF_max: float | None = None) -> Semilinear:
    """F(s) = s (1 + sin s).

    Its derivative is unbounded; ``dF_max`` clamps F' (and zeroes F'' where
    the clamp is active), which makes F' no longer the exact derivative of F.
    """

    def F(s):
        s = np.asarray(s, dtype=float)
        return s * (1.0 + np.sin(s))

    def dF(s):
        s = np.asarray(s, dtype=float)
        d = 1.0 + np.sin(s) + s * np.cos(s)
        return d if dF_max is None else np.clip(d, -dF_max, dF_max)

    def d2F(s):
        s = np.asarray(s, dtype=float)
        d2 = 2.0 * np.cos(s) - s * np.sin(s)
        if dF_max is None:
            return d2
        return np.where(np.abs(1.0 + np.sin(s) + s * np.cos(s)) < dF_max, d2, 0.0)

    label = "sine" if dF_max is None else f"sine(clamp={dF_max:g})"
    return Semilinear(F, dF, d2F, label=label)


def solve_spd(A, b: np.ndarray, tol: float = 1e-10, maxiter: int | None = None) -> np.ndarray:
    """Conjugate-gradient solve of an SPD system to relative residual ``tol``."""
    b = np.asarray(b, dtype=float)
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return np.zeros_like(b)
    n = b.shape[0]
    maxiter = 10 * n if maxiter is None else maxiter
    x, info = spla.cg(A, b, rtol=tol, atol=0.0, maxiter=maxiter)
    res = np.linalg.norm(A @ x - b) / bnorm
    if info != 0 or not np.isfinite(res) or res > 10 * tol:
        raise SolverError(f"CG did not reach relative residual {tol:g} in {maxiter} iterations (got {res:.2e})")
    return x


class StepOperator:
    """Factorized implicit step ``I + dt*A_h + dt*diag(c)`` on interior nodes.

    Operates on full-grid fields; exterior nodes stay zero.
    """

    def __init__(self, grid: SpatialGrid, dt: float, reaction: np.ndarray | None = None):
        n = grid.interior.size
        M = sp.identity(n, format="csc") + dt * grid.laplacian.tocsc()
        if reaction is not None:
            M = M + sp.diags(dt * reaction[grid.interior], format="csc")
        self.grid = grid
        self.matrix = M.tocsc()
        self._lu = spla.splu(self.matrix)

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        idx = self.grid.interior
        out = np.zeros(self.grid.size)
        out[idx] = self._lu.solve(np.ascontiguousarray(rhs[idx]))
        return out

    def apply(self, x: np.ndarray) -> np.ndarray:
        idx = self.grid.interior
        out = np.zeros(self.grid.size)
        out[idx] = self.matrix @ x[idx]
        return out


def heat_step(grid: SpatialGrid, dt: float) -> StepOperator:
    key = ("heat", float(dt))
    op = grid._cache.get(key)
    if op is None:
        op = grid._cache[key] = StepOperator(grid, dt)
    return op


def bilinear_steps(grid: SpatialGrid, time: TimeGrid, v: np.ndarray) -> list[StepOperator]:
    """Step operators for levels 1..nt with the control frozen at each level."""
    dt = time.dt
    ops = []
    for n in range(time.nt):
        c = np.where(grid.omega, v[n], 0.0)
        if not np.any(c):
            ops.append(heat_step(grid, dt))
            continue
        worst = 1.0 + dt * c[grid.omega].min()
        if worst <= 0.0:
            raise IndefiniteStepError(n + 1, worst)
        ops.append(StepOperator(grid, dt, c))
    return ops


def _control(grid, time, v):
    if v is None:
        return np.zeros((time.nt, grid.size))
    v = np.asarray(v, dtype=float)
    if v.shape != (time.nt, grid.size):
        raise ValueError(f"control must have shape {(time.nt, grid.size)}, got {v.shape}")
    return np.where(grid.omega, v, 0.0)


def forward_linear(grid: SpatialGrid, time: TimeGrid, u0: np.ndarray, v: np.ndarray | None = None) -> np.ndarray:
    v = _control(grid, time, v)
    S = heat_step(grid, time.dt)
    u = np.zeros((time.nt + 1, grid.size))
    u[0] = grid.field(u0)
    for n in range(time.nt):
        u[n + 1] = S.solve(u[n] + time.dt * v[n])
    return u


def forward_semilinear(grid: SpatialGrid, time: TimeGrid, u0: np.ndarray, v: np.ndarray | None, model: Semilinear) -> np.ndarray:
    v = _control(grid, time, v)
    S = heat_step(grid, time.dt)
    dt = time.dt
    u = np.zeros((time.nt + 1, grid.size))
    u[0] = grid.field(u0)
    for n in range(time.nt):
        with np.errstate(over="ignore", invalid="ignore"):
            r = model.F(u[n])
        if not np.all(np.isfinite(r)):
            raise SolverError(f"non-finite reaction term at time level {n}")
        u[n + 1] = S.solve(u[n] - dt * grid.field(r) + dt * v[n])
    return u


def forward_bilinear(grid: SpatialGrid, time: TimeGrid, u0: np.ndarray, v: np.ndarray | None = None, steps=None) -> np.ndarray:
    v = _control(grid, time, v)
    steps = bilinear_steps(grid, time, v) if steps is None else steps
    u = np.zeros((time.nt + 1, grid.size))
    u[0] = grid.field(u0)
    for n in range(time.nt):
        u[n + 1] = steps[n].solve(u[n])
    return u


def forward(grid: SpatialGrid, time: TimeGrid, model: ModelKind, u0: np.ndarray, v: np.ndarray | None = None) -> np.ndarray:
    if isinstance(model, Linear):
        return forward_linear(grid, time, u0, v)
    if isinstance(model, Semilinear):
        return forward_semilinear(grid, time, u0, v, model)
    if isinstance(model, Bilinear):
        return forward_bilinear(grid, time, u0, v)
    raise TypeError(f"unknown model {model!r}")
