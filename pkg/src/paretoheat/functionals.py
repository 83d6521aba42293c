"""Cost functionals, adjoint gradients and the Pareto optimality residual.

Both objectives use a one-half factor on the tracking term,

    J_i(v) = 1/2 ||u(T) - u_i(T)||^2_{O_i} + mu/2 ||v||^2,

and ``J_alpha = alpha J_1 + (1 - alpha) J_2``.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np

from .admissible import AdmissibleSet, FullSpace
from .adjoint import TerminalWeight, adjoint_bilinear, adjoint_linear, adjoint_semilinear
from .grid import SpatialGrid, TimeGrid, control_norm, norm
from .models import Bilinear, Linear, ModelKind, Semilinear, bilinear_steps, forward, forward_bilinear, forward_linear


class SpecError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class ProblemSpec:
    grid: SpatialGrid
    time: TimeGrid
    model: ModelKind
    mu: float
    alpha: float
    u0: np.ndarray
    u01: np.ndarray
    u02: np.ndarray
    admissible: AdmissibleSet = field(default_factory=FullSpace)

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise SpecError(f"alpha must lie in [0, 1], got {self.alpha}")
        if self.mu < 0:
            raise SpecError(f"mu must be nonnegative, got {self.mu}")
        if isinstance(self.model, Bilinear) and self.mu <= 0:
            raise SpecError("the bilinear model needs mu > 0")
        for name in ("u0", "u01", "u02"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != (self.grid.size,):
                raise SpecError(f"{name} must be a field of size {self.grid.size}")
            object.__setattr__(self, name, self.grid.field(arr))

    def with_(self, **changes) -> "ProblemSpec":
        return replace(self, **changes)

    @cached_property
    def targets(self) -> tuple[np.ndarray, np.ndarray]:
        return uncontrolled_targets(self)

    @cached_property
    def terminal_weight(self) -> TerminalWeight:
        u1T, u2T = self.targets
        return TerminalWeight.build(self.grid, self.alpha, u1T, u2T)

    def zero_control(self) -> np.ndarray:
        return np.zeros((self.time.nt, self.grid.size))


@dataclass(frozen=True)
class CostPair:
    J1: float
    J2: float
    tracking1: float
    tracking2: float
    control_norm: float
    mu: float

    def blended(self, alpha: float) -> float:
        return alpha * self.J1 + (1.0 - alpha) * self.J2

    def decomposition_error(self) -> float:
        pen = 0.5 * self.mu * self.control_norm**2
        e1 = abs(self.J1 - (0.5 * self.tracking1**2 + pen))
        e2 = abs(self.J2 - (0.5 * self.tracking2**2 + pen))
        return max(e1, e2) / max(1.0, abs(self.J1), abs(self.J2))


def uncontrolled_targets(spec: ProblemSpec) -> tuple[np.ndarray, np.ndarray]:
    """Terminal slices of the uncontrolled trajectories from ``u01`` and ``u02``."""
    g, t = spec.grid, spec.time
    if isinstance(spec.model, Semilinear):
        u1 = forward(g, t, spec.model, spec.u01)
        u2 = forward(g, t, spec.model, spec.u02)
    else:
        # with v = 0 the bilinear model is plain heat flow
        u1 = forward_linear(g, t, spec.u01)
        u2 = forward_linear(g, t, spec.u02)
    return u1[-1], u2[-1]


def state(spec: ProblemSpec, v: np.ndarray | None = None) -> np.ndarray:
    return forward(spec.grid, spec.time, spec.model, spec.u0, v)


def costs_from_terminal(spec: ProblemSpec, uT: np.ndarray, v: np.ndarray) -> CostPair:
    g = spec.grid
    u1T, u2T = spec.targets
    t1 = norm(g, uT - u1T, g.o1)
    t2 = norm(g, uT - u2T, g.o2)
    vn = control_norm(g, spec.time, v)
    pen = 0.5 * spec.mu * vn**2
    return CostPair(0.5 * t1**2 + pen, 0.5 * t2**2 + pen, t1, t2, vn, spec.mu)


def evaluate_costs(spec: ProblemSpec, v: np.ndarray, check_admissible: bool = True) -> CostPair:
    if check_admissible and not spec.admissible.contains(v, spec.grid, spec.time):
        raise SpecError("control is outside the admissible set")
    return costs_from_terminal(spec, state(spec, v)[-1], v)


def blended_cost(spec: ProblemSpec, v: np.ndarray) -> float:
    return evaluate_costs(spec, v, check_admissible=False).blended(spec.alpha)


def adjoint_drive(spec: ProblemSpec, v: np.ndarray, u: np.ndarray | None = None, terminal_weight: TerminalWeight | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(u, d)`` with ``d[n]`` the adjoint part of the gradient at control level ``n``.

    ``gradient = d + mu v``.  For the bilinear model ``d[n] = -p[n] u[n+1]``.
    """
    g, t, m = spec.grid, spec.time, spec.model
    tw = spec.terminal_weight if terminal_weight is None else terminal_weight
    if isinstance(m, Bilinear):
        steps = bilinear_steps(g, t, np.where(g.omega, v, 0.0))
        if u is None:
            u = forward_bilinear(g, t, spec.u0, v, steps=steps)
        p = adjoint_bilinear(g, t, v, tw.terminal(u[-1]), steps=steps)
        d = -p[:-1] * u[1:]
    else:
        if u is None:
            u = state(spec, v)
        q = tw.terminal(u[-1])
        if isinstance(m, Linear):
            p = adjoint_linear(g, t, q)
        else:
            p = adjoint_semilinear(g, t, u, q, m)
        d = p[:-1]
    return u, np.where(g.omega, d, 0.0)


def gradient(spec: ProblemSpec, v: np.ndarray) -> np.ndarray:
    """Riesz representative of J_alpha'(v) in the discrete control space."""
    v = np.where(spec.grid.omega, v, 0.0)
    _, d = adjoint_drive(spec, v)
    return d + spec.mu * v


def single_objective_gradients(spec: ProblemSpec, v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Gradients of J_1 and J_2 separately (two adjoint solves)."""
    v = np.where(spec.grid.omega, v, 0.0)
    u1T, u2T = spec.targets
    out = []
    u = None
    for a in (1.0, 0.0):
        tw = TerminalWeight.build(spec.grid, a, u1T, u2T)
        u, d = adjoint_drive(spec, v, u=u, terminal_weight=tw)
        out.append(d + spec.mu * v)
    return out[0], out[1]


def optimality_residual(spec: ProblemSpec, v: np.ndarray) -> float:
    """Projected-gradient residual ``||v - P_U(v - J_alpha'(v))||``."""
    if spec.mu <= 0:
        raise SpecError("the optimality residual is defined for mu > 0 only")
    g, t = spec.grid, spec.time
    v = np.where(g.omega, v, 0.0)
    r = v - spec.admissible.project(v - gradient(spec, v), g, t)
    return control_norm(g, t, r)
