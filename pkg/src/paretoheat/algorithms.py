"""Solvers for Pareto equilibria.

Stopping metrics (``history`` in the report):

* ``cg_generic`` / ``pareto_cg_linear``: relative gradient norm ``||g^k|| / ||g^0||``
* fixed-point and descent methods: relative control change
  ``||v^{k+1} - v^k|| / max(||v^k||, 1e-30)``
* ``newton_semilinear``: residual of the discrete optimality system relative
  to its value at the initial guess.
"""
from __future__ import annotations

import time as _time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .admissible import FullSpace
from .adjoint import TerminalWeight, adjoint_linear
from .functionals import (
    CostPair,
    ProblemSpec,
    SpecError,
    adjoint_drive,
    evaluate_costs,
    optimality_residual,
    state,
)
from .grid import control_norm, spacetime_inner_product
from .models import Bilinear, Linear, Semilinear, SolverError, forward_linear, heat_step

TINY = 1e-30


class ConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class SolverOptions:
    tol: float = 1e-8
    max_iter: int = 500
    step: float | None = None
    damping: bool = False
    newton_terminal: str = "weighted"
    inner_tol: float = 1e-12
    power_iterations: int = 10

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tolerance must be positive")
        if self.step is not None and not self.step > 0:
            raise ValueError("descent step must be positive")
        if self.newton_terminal not in ("weighted", "unweighted"):
            raise ValueError("newton_terminal must be 'weighted' or 'unweighted'")


@dataclass(frozen=True, eq=False)
class SolveReport:
    control: np.ndarray
    costs: CostPair | None
    history: list[float]
    iterations: int
    converged: bool
    wall_time: float
    algorithm: str = ""
    residual: float = float("nan")
    final_state: np.ndarray | None = None
    message: str = ""
    extras: dict = field(default_factory=dict)


def cg_generic(
    apply_A: Callable[[np.ndarray], np.ndarray],
    b: np.ndarray,
    x0: np.ndarray | None = None,
    options: SolverOptions = SolverOptions(),
    inner: Callable[[np.ndarray, np.ndarray], float] | None = None,
    callback: Callable[[np.ndarray], None] | None = None,
) -> SolveReport:
    """Optimal-step conjugate gradient for ``a(x, w) = L(w)``.

    ``b`` is the Riesz representative of ``L`` for ``inner``; ``apply_A``
    must be symmetric positive definite for the same product.
    """
    t0 = _time.perf_counter()
    inner = (lambda a, c: float(np.vdot(a, c))) if inner is None else inner
    x = np.zeros_like(b, dtype=float) if x0 is None else np.array(x0, dtype=float)
    g = apply_A(x) - b
    gg = inner(g, g)
    g0 = np.sqrt(gg)
    history: list[float] = []
    if g0 == 0.0:
        return SolveReport(x, None, history, 0, True, _time.perf_counter() - t0, "cg")
    z = g.copy()
    converged = False
    for _ in range(options.max_iter):
        Az = apply_A(z)
        denom = inner(z, Az)
        if not denom > 0:
            raise ConvergenceError(f"a(z, z) = {denom:.3e} is not positive; operator is not SPD")
        rho = gg / denom
        x = x - rho * z
        g = g - rho * Az
        gg_new = inner(g, g)
        history.append(np.sqrt(gg_new) / g0)
        if callback is not None:
            callback(x)
        if history[-1] <= options.tol:
            converged = True
            break
        z = g + (gg_new / gg) * z
        gg = gg_new
    return SolveReport(x, None, history, len(history), converged, _time.perf_counter() - t0, "cg")


def _finish(spec, v, history, converged, t0, name, message="", u=None, **extras) -> SolveReport:
    if u is None:
        u = state(spec, v)
    from .functionals import costs_from_terminal

    costs = costs_from_terminal(spec, u[-1], v)
    with np.errstate(over="ignore", invalid="ignore"):
        res = optimality_residual(spec, v) if spec.mu > 0 else float("nan")
    return SolveReport(
        v, costs, list(history), len(history), converged, _time.perf_counter() - t0,
        name, res, u[-1].copy(), message, extras,
    )


def _require(spec: ProblemSpec, kinds, name: str):
    if not isinstance(spec.model, kinds):
        raise SpecError(f"{name} does not apply to the {spec.model.name} model")
    if not spec.mu > 0:
        raise SpecError(f"{name} needs mu > 0 (the mu = 0 regime is not supported)")


def pareto_cg_linear(spec: ProblemSpec, options: SolverOptions = SolverOptions(), v0: np.ndarray | None = None) -> SolveReport:
    """Conjugate gradients on ``(mu I + Lambda_alpha) v = -f_alpha`` for the linear model."""
    _require(spec, Linear, "pareto_cg_linear")
    if not isinstance(spec.admissible, FullSpace):
        raise SpecError("pareto_cg_linear is unconstrained; use the full control space")
    t0 = _time.perf_counter()
    g_, t, mu, a = spec.grid, spec.time, spec.mu, spec.alpha
    om = g_.omega
    u1T, u2T = spec.targets
    dot = lambda x, y: spacetime_inner_product(g_, t, x, y)

    v = np.zeros((t.nt, g_.size)) if v0 is None else np.where(om, v0, 0.0)
    u = forward_linear(g_, t, spec.u0, v)
    phi1 = adjoint_linear(g_, t, (u[-1] - u1T) * g_.o1)
    phi2 = adjoint_linear(g_, t, (u[-1] - u2T) * g_.o2)
    g = np.where(om, a * phi1[:-1] + (1 - a) * phi2[:-1], 0.0) + mu * v
    gg = dot(g, g)
    g0 = np.sqrt(gg)
    history: list[float] = []
    converged = g0 == 0.0
    z = g.copy()
    zero = np.zeros(g_.size)
    while not converged and len(history) < options.max_iter:
        w = forward_linear(g_, t, zero, z)
        psi1 = adjoint_linear(g_, t, w[-1] * g_.o1)
        psi2 = adjoint_linear(g_, t, w[-1] * g_.o2)
        gbar = np.where(om, a * psi1[:-1] + (1 - a) * psi2[:-1], 0.0) + mu * z
        denom = dot(gbar, z)
        if not denom > 0:
            raise ConvergenceError(f"CG denominator {denom:.3e} is not positive")
        rho = gg / denom
        v = v - rho * z
        g = g - rho * gbar
        gg_new = dot(g, g)
        history.append(np.sqrt(gg_new) / g0)
        if history[-1] <= options.tol:
            converged = True
            break
        z = g + (gg_new / gg) * z
        gg = gg_new
    return _finish(spec, v, history, converged, t0, "pareto_cg_linear")


def _projected_fixed_point(spec, options, v0, name, update) -> SolveReport:
    t0 = _time.perf_counter()
    g_, t = spec.grid, spec.time
    U = spec.admissible
    v = U.project(np.zeros((t.nt, g_.size)) if v0 is None else v0, g_, t)
    u, d = adjoint_drive(spec, v)
    history: list[float] = []
    converged = False
    message = ""
    for _ in range(options.max_iter):
        with np.errstate(over="ignore", invalid="ignore"):
            v_new = U.project(update(v, d), g_, t)
            change = control_norm(g_, t, v_new - v) / max(control_norm(g_, t, v), TINY)
        if not np.isfinite(change):
            message = "diverged: non-finite iterate"
            break
        try:
            with np.errstate(over="ignore", invalid="ignore"):
                u_new, d_new = adjoint_drive(spec, v_new)
        except SolverError as exc:
            # keep the last iterate whose state was finite
            message = f"diverged: {exc}"
            break
        history.append(change)
        v, u, d = v_new, u_new, d_new
        if change <= options.tol:
            converged = True
            break
    else:
        message = f"iteration cap {options.max_iter} reached"
    return _finish(spec, v, history, converged, t0, name, message, u=u)


def fixed_point_semilinear(spec: ProblemSpec, options: SolverOptions = SolverOptions(), v0: np.ndarray | None = None) -> SolveReport:
    """Iterate ``v <- P_U(-(alpha phi_1 + (1 - alpha) phi_2) / mu)``."""
    _require(spec, (Semilinear, Linear), "fixed_point_semilinear")
    mu = spec.mu
    return _projected_fixed_point(spec, options, v0, "fixed_point_semilinear", lambda v, d: -d / mu)


def fixed_point_bilinear(spec: ProblemSpec, options: SolverOptions = SolverOptions(), v0: np.ndarray | None = None) -> SolveReport:
    """Iterate ``v <- P_U(u phi / mu)`` (state with the multiplicative control ``-u v``)."""
    _require(spec, Bilinear, "fixed_point_bilinear")
    mu = spec.mu
    return _projected_fixed_point(spec, options, v0, "fixed_point_bilinear", lambda v, d: -d / mu)


def lipschitz_estimate(spec: ProblemSpec, v: np.ndarray, iterations: int = 10, seed: int = 0) -> float:
    """Power-iteration estimate of the Lipschitz constant of ``v -> J'(v) - mu v``."""
    g_, t = spec.grid, spec.time
    rng = np.random.default_rng(seed)
    _, d0 = adjoint_drive(spec, v)
    delta = np.where(g_.omega, rng.standard_normal(v.shape), 0.0)
    est = 0.0
    for _ in range(iterations):
        nd = control_norm(g_, t, delta)
        if nd == 0.0:
            break
        delta = delta / nd
        eps = 1e-6 * max(1.0, control_norm(g_, t, v))
        _, d1 = adjoint_drive(spec, v + eps * delta)
        w = (d1 - d0) / eps
        est = control_norm(g_, t, w)
        delta = w
    return est


def gradient_descent_bilinear(spec: ProblemSpec, options: SolverOptions = SolverOptions(), v0: np.ndarray | None = None) -> SolveReport:
    """Projected gradient descent ``v <- P_U((1 - tau mu) v + tau u phi)`` with a fixed step."""
    _require(spec, Bilinear, "gradient_descent_bilinear")
    mu = spec.mu
    tau = options.step
    if tau is None:
        v_start = spec.admissible.project(spec.zero_control() if v0 is None else v0, spec.grid, spec.time)
        L = lipschitz_estimate(spec, v_start, options.power_iterations)
        tau = 1.0 / (mu + L)
    rep = _projected_fixed_point(
        spec, options, v0, "gradient_descent_bilinear", lambda v, d: (1.0 - tau * mu) * v - tau * d
    )
    rep.extras["tau"] = tau
    return rep


class _NewtonSystem:
    """Discrete optimality system of the semilinear model in (state, adjoint) form.

    Unknowns are the state levels ``u[0..nt]`` (``u[0] = u0`` fixed) and the
    adjoint levels ``p[0..nt-1]`` paired with the control, ``v = -p / mu`` on omega.
    """

    def __init__(self, spec: ProblemSpec, tw: TerminalWeight, lin_state: np.ndarray, inner_tol: float):
        self.spec = spec
        self.g = spec.grid
        self.t = spec.time
        self.mu = spec.mu
        self.tw = tw
        self.S = heat_step(self.g, self.t.dt)
        self.model = spec.model
        self.inner_tol = inner_tol
        if isinstance(self.model, Semilinear):
            self.dF_lin = np.array([self.g.field(self.model.dF(x)) for x in lin_state])
        else:
            self.dF_lin = np.zeros_like(lin_state)
        self.sqrt_w = np.sqrt(tw.weight)

    def _F(self, x):
        return self.g.field(self.model.F(x)) if isinstance(self.model, Semilinear) else np.zeros_like(x)

    def _dF(self, x):
        return self.g.field(self.model.dF(x)) if isinstance(self.model, Semilinear) else np.zeros_like(x)

    def residual(self, u, p):
        dt, om, nt = self.t.dt, self.g.omega, self.t.nt
        S = self.S
        r1 = np.zeros((nt, self.g.size))
        r2 = np.zeros((nt, self.g.size))
        for n in range(nt):
            r1[n] = S.apply(u[n + 1]) - self.g.field(u[n] - dt * self._F(u[n])) + (dt / self.mu) * om * p[n]
        for n in range(nt - 1):
            r2[n] = S.apply(p[n]) - self.g.field(p[n + 1] - dt * self._dF(u[n + 1]) * p[n + 1])
        r2[nt - 1] = S.apply(p[nt - 1]) - self.g.field(self.tw.terminal(u[nt]))
        return r1, r2

    def norm(self, r1, r2):
        w = self.g.weights
        return float(np.sqrt(np.sum(w * r1**2) + np.sum(w * r2**2)))

    def _backward(self, r2, src):
        dt, nt = self.t.dt, self.t.nt
        psi = np.zeros((nt, self.g.size))
        psi[nt - 1] = self.S.solve(r2[nt - 1] + src)
        for n in range(nt - 2, -1, -1):
            psi[n] = self.S.solve(r2[n] + self.g.field(psi[n + 1] - dt * self.dF_lin[n + 1] * psi[n + 1]))
        return psi

    def _forward(self, r1, psi):
        dt, nt, om = self.t.dt, self.t.nt, self.g.omega
        y = np.zeros((nt + 1, self.g.size))
        for n in range(nt):
            y[n + 1] = self.S.solve(r1[n] + self.g.field(y[n] - dt * self.dF_lin[n] * y[n]) - (dt / self.mu) * om * psi[n])
        return y

    def solve_linearized(self, r1, r2):
        """Solve the Jacobian system at the linearization point by shooting on y(T)."""
        g_ = self.g
        zero1 = np.zeros_like(r1)
        zero2 = np.zeros_like(r2)
        G0 = self._forward(r1, self._backward(r2, np.zeros(g_.size)))[-1]
        sw = self.sqrt_w

        def coupling(x):
            # (1/mu) M M^* x: one homogeneous backward sweep, one forward sweep
            return -self._forward(zero1, self._backward(zero2, x))[-1]

        # y(T) = G0 - coupling(w y(T)); symmetrize with s = sqrt(w) y(T)
        inner = lambda a, b: float(np.sum(g_.weights * a * b))
        apply = lambda s: s + sw * coupling(sw * s)
        rep = cg_generic(apply, sw * G0, None, SolverOptions(tol=self.inner_tol, max_iter=10 * g_.interior.size + 50), inner)
        if not rep.converged:
            raise ConvergenceError("inner coupled solve did not converge")
        tau = G0 - coupling(sw * rep.control)
        psi = self._backward(r2, self.tw.weight * tau)
        y = self._forward(r1, psi)
        return y, psi


def newton_semilinear(spec: ProblemSpec, options: SolverOptions = SolverOptions()) -> SolveReport:
    """Simplified Newton iteration on the optimality system, Jacobian frozen at (u_alpha, 0)."""
    _require(spec, (Semilinear, Linear), "newton_semilinear")
    if not isinstance(spec.admissible, FullSpace):
        raise SpecError("newton_semilinear is unconstrained; use the full control space")
    t0 = _time.perf_counter()
    g_, t, a = spec.grid, spec.time, spec.alpha
    u1T, u2T = spec.targets
    if options.newton_terminal == "weighted":
        tw = spec.terminal_weight
    else:
        tw = TerminalWeight.unweighted(g_, a, u1T, u2T)
    u_alpha = state(spec.with_(u0=a * spec.u01 + (1 - a) * spec.u02), None)
    system = _NewtonSystem(spec, tw, u_alpha, options.inner_tol)

    u = state(spec, None)
    p = np.zeros((t.nt, g_.size))
    r1, r2 = system.residual(u, p)
    r0 = system.norm(r1, r2)
    history: list[float] = []
    converged = r0 == 0.0
    message = ""
    growth = 0
    prev = 1.0
    while not converged and len(history) < options.max_iter:
        y, psi = system.solve_linearized(r1, r2)
        step = 1.0
        while True:
            u_new, p_new = u - step * y, p - step * psi
            r1n, r2n = system.residual(u_new, p_new)
            rel = system.norm(r1n, r2n) / r0
            if not options.damping or rel < prev or step < 1e-3:
                break
            step *= 0.5
        u, p, r1, r2 = u_new, p_new, r1n, r2n
        history.append(rel)
        if not np.isfinite(rel):
            message = "diverged (non-finite residual)"
            break
        if rel <= options.tol:
            converged = True
            break
        growth = growth + 1 if rel > prev else 0
        prev = rel
        if growth >= 3:
            message = "diverged (residual grew 3 consecutive iterations)"
            break
    else:
        if not converged:
            message = f"iteration cap {options.max_iter} reached"
    v = np.where(g_.omega, -p / spec.mu, 0.0)
    if not np.all(np.isfinite(v)):
        v = np.zeros_like(v)
        return SolveReport(v, None, history, len(history), False, _time.perf_counter() - t0, "newton_semilinear", float("nan"), None, message)
    return _finish(spec, v, history, converged, t0, "newton_semilinear", message, state_iterate=u[-1])


ALGORITHMS = {
    2: pareto_cg_linear,
    3: fixed_point_semilinear,
    4: newton_semilinear,
    5: gradient_descent_bilinear,
    6: fixed_point_bilinear,
}

COMPATIBLE = {2: Linear, 3: Semilinear, 4: Semilinear, 5: Bilinear, 6: Bilinear}


def solve(spec: ProblemSpec, algorithm: int, options: SolverOptions = SolverOptions()) -> SolveReport:
    if algorithm not in ALGORITHMS:
        raise ValueError(f"algorithm must be one of {sorted(ALGORITHMS)}, got {algorithm}")
    return ALGORITHMS[algorithm](spec, options)
