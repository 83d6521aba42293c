"""Discrete adjoints: literal transposes of the steppers in :mod:`models`.

Every backward solver returns an array ``p`` of shape ``(nt + 1, size)`` with
``p[nt]`` the terminal datum and, for ``n < nt``, ``p[n]`` the field paired
with the control level ``v[n]``.  For a terminal datum ``q`` and a
perturbation ``dv`` of the control,

    (q, du(T)) = sum_n dt * (p[n], dv[n])          (linear, semilinear)
    (q, du(T)) = -sum_n dt * (p[n] u[n+1], dv[n])  (bilinear)

holds to round-off, with ``du`` the linearized state response.

Semilinear transpose.  The forward step is
``u[n+1] = S (u[n] - dt F(u[n]) + dt v[n])`` with ``S = (I + dt A_h)^{-1}``
symmetric, so the linearized step is ``S (I - dt F'(u[n]))``.  Its
transpose gives ``p[nt-1] = S q`` and
``p[n] = S (I - dt F'(u[n+1])) p[n+1]`` for ``n <= nt - 2``.  The reaction
at the final level never enters the state, hence no F'(u[nt]) factor.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import SpatialGrid, TimeGrid
from .models import Semilinear, bilinear_steps, heat_step


@dataclass(frozen=True, eq=False)
class TerminalWeight:
    """Blended terminal data ``w_alpha u(T) - g_alpha``."""

    alpha: float
    weight: np.ndarray
    target: np.ndarray

    @classmethod
    def build(cls, grid: SpatialGrid, alpha: float, u1T: np.ndarray, u2T: np.ndarray) -> "TerminalWeight":
        if not 0.0 <= alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
        c1 = alpha * grid.o1
        c2 = (1.0 - alpha) * grid.o2
        return cls(alpha, c1 + c2, c1 * u1T + c2 * u2T)

    @classmethod
    def unweighted(cls, grid: SpatialGrid, alpha: float, u1T: np.ndarray, u2T: np.ndarray) -> "TerminalWeight":
        """Indicator-free variant: ``u(T) - (alpha u1T + (1 - alpha) u2T)`` on the whole domain."""
        w = grid.mask.astype(float)
        return cls(alpha, w, w * (alpha * u1T + (1.0 - alpha) * u2T))

    def terminal(self, uT: np.ndarray) -> np.ndarray:
        return self.weight * uT - self.target


def adjoint_linear(grid: SpatialGrid, time: TimeGrid, terminal: np.ndarray) -> np.ndarray:
    S = heat_step(grid, time.dt)
    p = np.zeros((time.nt + 1, grid.size))
    p[-1] = grid.field(terminal)
    for n in range(time.nt - 1, -1, -1):
        p[n] = S.solve(p[n + 1])
    return p


def adjoint_semilinear(grid: SpatialGrid, time: TimeGrid, state: np.ndarray, terminal: np.ndarray, model: Semilinear) -> np.ndarray:
    S = heat_step(grid, time.dt)
    dt = time.dt
    nt = time.nt
    p = np.zeros((nt + 1, grid.size))
    p[-1] = grid.field(terminal)
    p[nt - 1] = S.solve(p[nt])
    for n in range(nt - 2, -1, -1):
        lam = p[n + 1] - dt * model.dF(state[n + 1]) * p[n + 1]
        p[n] = S.solve(grid.field(lam))
    return p


def adjoint_bilinear(grid: SpatialGrid, time: TimeGrid, v: np.ndarray, terminal: np.ndarray, steps=None) -> np.ndarray:
    steps = bilinear_steps(grid, time, v) if steps is None else steps
    p = np.zeros((time.nt + 1, grid.size))
    p[-1] = grid.field(terminal)
    for n in range(time.nt - 1, -1, -1):
        p[n] = steps[n].solve(p[n + 1])
    return p
