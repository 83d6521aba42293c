"""Executable correctness checks, shared by the ``validate`` command and the test suite.

Each ``check_*`` function returns a :class:`CheckResult`.  Presets bundle
the checks: ``default`` runs on 1D grids in well under a minute, while
``acceptance`` runs every check at its full size.
"""
from __future__ import annotations

import copy
import time as _time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import admissible as adm
from .algorithms import (
    SolverOptions,
    SolveReport,
    cg_generic,
    fixed_point_bilinear,
    fixed_point_semilinear,
    gradient_descent_bilinear,
    newton_semilinear,
    pareto_cg_linear,
)
from .config import PRESETS, parse_config
from .functionals import ProblemSpec, evaluate_costs, gradient, optimality_residual
from .grid import control_norm, spacetime_inner_product
from .oracle import assemble_dense, dense_minimize, directional_derivatives, from_vector
from .models import zero_reaction

RESIDUAL_TOL = 1e-7


@dataclass
class CheckResult:
    name: str
    passed: bool
    error: float
    tolerance: float
    detail: str = ""
    seconds: float = 0.0
    reports: list = field(default_factory=list, repr=False)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.name}: error {self.error:.3e} (tol {self.tolerance:.1e}), {self.seconds:.2f} s{'; ' + self.detail if self.detail else ''}"


def _timed(fn):
    def wrapper(*args, **kwargs):
        t0 = _time.perf_counter()
        res = fn(*args, **kwargs)
        res.seconds = _time.perf_counter() - t0
        return res

    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


def problem(preset: str, alpha: float = 0.5, mu: float = 5.0, nodes=None, nt=None, **model) -> ProblemSpec:
    """Spec for one cell of a named preset, optionally at another resolution."""
    raw = copy.deepcopy(PRESETS[preset][1])
    if nodes is not None:
        raw["geometry"]["nodes"] = list(nodes)
    if nt is not None:
        raw["time"]["nt"] = nt
    raw["model"].update(model, alpha=[alpha], mu=[mu])
    return parse_config(raw, f"preset:{preset}").problems()[0]


def _rng_control(spec: ProblemSpec, rng, scale=1.0) -> np.ndarray:
    g, t = spec.grid, spec.time
    return np.where(g.omega, scale * rng.standard_normal((t.nt, g.size)), 0.0)


def corrupted_gradient(spec: ProblemSpec, v: np.ndarray) -> np.ndarray:
    """Gradient with the adjoint contribution's sign flipped (harness sanity check)."""
    return 2.0 * spec.mu * np.where(spec.grid.omega, v, 0.0) - gradient(spec, v)


# -- individual checks -----------------------------------------------------------

@_timed
def check_gradients(nodes: int = 32, nt: int = 16, directions: int = 20, tol: float = 1e-6,
                    eps: float = 1e-5, seed: int = 0, gradient_fn: Callable = gradient) -> CheckResult:
    """Adjoint gradient against central differences along random directions, all three models."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    parts = []
    for name in ("tiny_linear", "tiny_semilinear", "tiny_bilinear"):
        spec = problem(name, alpha=0.4, mu=1.0, nodes=[nodes], nt=nt)
        spec = spec.with_(admissible=adm.FullSpace())
        v = _rng_control(spec, rng)
        g = gradient_fn(spec, v)
        dirs = [_rng_control(spec, rng) for _ in range(directions)]
        fd = directional_derivatives(spec, v, dirs, eps)
        ad = np.array([spacetime_inner_product(spec.grid, spec.time, g, d) for d in dirs])
        rel = np.abs(fd - ad) / np.maximum(np.maximum(np.abs(fd), np.abs(ad)), 1e-300)
        worst = max(worst, float(rel.max()))
        parts.append(f"{spec.model.name} {rel.max():.1e}")
    return CheckResult("gradient vs finite differences", worst <= tol, worst, tol, ", ".join(parts))


@_timed
def check_dense_oracle(nodes: int = 8, nt: int = 8, mus=(1.0, 5.0, 10.0), alphas=(0.1, 0.5, 0.9),
                       tol: float = 1e-8) -> CheckResult:
    """Pareto CG against the dense normal-equations minimizer on a tiny linear problem."""
    raw = copy.deepcopy(PRESETS["tiny_linear"][1])
    # at 8 nodes no grid point falls inside the standard overlap [-0.3, 0.3]
    raw["geometry"].update(nodes=[nodes], o1={"shape": "box", "lo": [-1.5], "hi": [0.5]},
                           o2={"shape": "box", "lo": [-0.5], "hi": [1.5]})
    raw["time"]["nt"] = nt
    raw["model"].update(alpha=list(alphas), mu=list(mus))
    specs = parse_config(raw, "dense-oracle").problems()
    dmap = assemble_dense(specs[0])
    worst = 0.0
    reports = []
    for spec in specs:
        r = pareto_cg_linear(spec)
        reports.append(r)
        v_ref = dense_minimize(spec, dmap)
        ref = control_norm(spec.grid, spec.time, v_ref)
        diff = control_norm(spec.grid, spec.time, r.control - v_ref) / max(ref, 1e-300)
        worst = max(worst, diff)
    return CheckResult("pareto CG vs dense minimizer", worst <= tol, worst, tol, f"{len(specs)} cells", reports=reports)


def _pairwise(grid, time, controls: dict) -> tuple[float, str]:
    names = list(controls)
    worst, parts = 0.0, []
    for i in range(len(names)):
        for j in range(i + 1, len(names)):
            d = control_norm(grid, time, controls[names[i]] - controls[names[j]])
            worst = max(worst, d)
            parts.append(f"{names[i]}/{names[j]} {d:.1e}")
    return worst, ", ".join(parts)


@_timed
def check_cross_algorithms(dim: int = 1, nodes: int | None = None, nt: int | None = None, alpha: float = 0.5,
                           mu: float = 5.0, tol: float = 1e-6) -> CheckResult:
    """Algorithms 2/3/4 on the reaction-free model, and 5/6 on the bilinear model, must agree."""
    names = {1: ("tiny_linear", "tiny_bilinear"), 2: ("test1", "test5")}[dim]
    res = [nodes] * dim if nodes else None
    lin = problem(names[0], alpha, mu, res, nt)
    reports = [pareto_cg_linear(lin), fixed_point_semilinear(lin.with_(model=zero_reaction())),
               newton_semilinear(lin.with_(model=zero_reaction()))]
    bil = problem(names[1], alpha, mu, res, nt)
    reports += [gradient_descent_bilinear(bil), fixed_point_bilinear(bil)]
    w1, d1 = _pairwise(lin.grid, lin.time, {f"A{k}": r.control for k, r in zip((2, 3, 4), reports[:3])})
    w2, d2 = _pairwise(bil.grid, bil.time, {f"A{k}": r.control for k, r in zip((5, 6), reports[3:])})
    ok = all(r.converged for r in reports) and max(w1, w2) <= tol
    return CheckResult("cross-algorithm agreement", ok, max(w1, w2), tol, f"{d1}; {d2}", reports=reports)


@_timed
def check_residuals(reports: list[SolveReport], specs: list[ProblemSpec] | None = None,
                    tol: float = RESIDUAL_TOL) -> CheckResult:
    """Every converged report must have a small projected-gradient residual."""
    worst = 0.0
    count = 0
    for k, r in enumerate(reports):
        if not r.converged:
            continue
        res = r.residual if specs is None else optimality_residual(specs[k], r.control)
        worst = max(worst, float(res))
        count += 1
    ok = count > 0 and worst <= tol
    return CheckResult("optimality residual of converged solves", ok, worst, tol, f"{count} converged solves")


@_timed
def check_front_trends(preset: str = "test1", alphas=None, mus=(1.0, 5.0, 10.0), slack: float = 1e-10,
                       nodes=None, nt=None, workers: int = 1) -> CheckResult:
    """Tracking norms trade off monotonically in alpha and the control norm shrinks with mu."""
    from .cli import run_cells

    raw = copy.deepcopy(PRESETS[preset][1])
    if alphas is not None:
        raw["model"]["alpha"] = list(alphas)
    raw["model"]["mu"] = list(mus)
    if nodes is not None:
        raw["geometry"]["nodes"] = list(nodes)
    if nt is not None:
        raw["time"]["nt"] = nt
    cfg = parse_config(raw, f"preset:{preset}")
    cells = run_cells(cfg, workers=workers)
    A, M = len(cfg.alpha), len(cfg.mu)
    t1 = np.array([c.report.costs.tracking1 for c in cells]).reshape(A, M)
    t2 = np.array([c.report.costs.tracking2 for c in cells]).reshape(A, M)
    vn = np.array([c.report.costs.control_norm for c in cells]).reshape(A, M)
    order = np.argsort(cfg.mu)
    viol1 = float(np.max(np.diff(t1, axis=0), initial=-np.inf))
    viol2 = float(np.max(-np.diff(t2, axis=0), initial=-np.inf))
    viol3 = float(np.max(np.diff(vn[:, order], axis=1), initial=-np.inf))
    worst = max(viol1, viol2, viol3)
    ok = all(c.report.converged for c in cells) and worst <= slack
    detail = f"{len(cells)} solves; max increase of |u-u1|: {viol1:.1e}, max decrease of |u-u2|: {viol2:.1e}, max increase of |v| in mu: {viol3:.1e}"
    return CheckResult("pareto front trends", ok, max(worst, 0.0), slack, detail, reports=[c.report for c in cells])


def _single_objective_minimizer(spec: ProblemSpec, which: int) -> np.ndarray:
    """Least-squares minimizer of J_1 or J_2 alone, built from the dense control-to-state map."""
    g, t = spec.grid, spec.time
    dmap = assemble_dense(spec)
    target = spec.targets[which - 1]
    region = g.o1 if which == 1 else g.o2
    rows = np.sqrt(np.where(region, g.weights, 0.0))
    ctrl_w = t.dt * np.tile(g.weights[g.omega_index], t.nt)
    A = np.vstack([rows[:, None] * dmap.matrix, np.diag(np.sqrt(spec.mu * ctrl_w))])
    b = np.concatenate([rows * (target - dmap.offset), np.zeros(ctrl_w.size)])
    x, *_ = np.linalg.lstsq(A, b, rcond=None)
    return from_vector(g, t, x)


@_timed
def check_endpoints(nodes: int = 16, nt: int = 8, mu: float = 5.0, tol: float = 1e-7) -> CheckResult:
    """alpha = 1 (resp. 0) reproduces the J_1 (resp. J_2) minimizer."""
    worst, parts, reports = 0.0, [], []
    for alpha, which in ((1.0, 1), (0.0, 2)):
        spec = problem("tiny_linear", alpha, mu, [nodes], nt)
        r = pareto_cg_linear(spec)
        reports.append(r)
        diff = control_norm(spec.grid, spec.time, r.control - _single_objective_minimizer(spec, which))
        worst = max(worst, diff)
        parts.append(f"alpha={alpha:g} vs J{which}: {diff:.1e}")
    return CheckResult("endpoint degeneration", worst <= tol, worst, tol, ", ".join(parts), reports=reports)


@_timed
def check_contraction(preset: str = "test3", nodes=None, nt=None, alpha: float = 0.5,
                      small_mu: float = 0.01, small_mu_cap: int = 100) -> CheckResult:
    """Fixed-point iteration contracts for large mu; the small-mu run is only recorded."""
    spec = problem(preset, alpha, 10.0, nodes, nt)
    r = fixed_point_semilinear(spec)
    steps = np.array(r.history)
    # ratio at iteration k is step k / step k-1 (history is 0-based)
    ratios = steps[2:] / steps[1:-1] if steps.size > 2 else np.array([])
    worst = float(ratios.max(initial=0.0))
    small = fixed_point_semilinear(spec.with_(mu=small_mu), SolverOptions(max_iter=small_mu_cap))
    note = f"mu=10: {r.iterations} iterations, max ratio {worst:.3f}; mu={small_mu:g}: converged={small.converged} after {small.iterations} iterations"
    if not small.converged:
        note += f" ({small.message})"
    return CheckResult("fixed-point contraction", r.converged and worst < 1.0, worst, 1.0, note, reports=[r, small])


@_timed
def check_no_improvement(samples: int = 50, magnitudes=(1e-3, 1e-2, 1e-1), seed: int = 1,
                         presets=("tiny_linear", "tiny_semilinear", "tiny_bilinear"), nodes=None, nt=None,
                         mu: float = 5.0) -> CheckResult:
    """No admissible perturbation of a computed equilibrium improves both objectives."""
    from .algorithms import solve

    rng = np.random.default_rng(seed)
    violations, reports, parts = 0, [], []
    best = -np.inf
    for name in presets:
        spec = problem(name, 0.5, mu, nodes, nt)
        algo = PRESETS[name][1]["solver"]["algorithm"]
        r = solve(spec, algo)
        reports.append(r)
        base = r.costs
        g, t = spec.grid, spec.time
        scale = max(control_norm(g, t, r.control), 1.0)
        for m in magnitudes:
            for _ in range(samples):
                d = _rng_control(spec, rng)
                d *= m * scale / control_norm(g, t, d)
                w = spec.admissible.project(r.control + d, g, t)
                c = evaluate_costs(spec, w)
                gain = min(base.J1 - c.J1, base.J2 - c.J2)
                best = max(best, gain)
                if c.J1 < base.J1 and c.J2 < base.J2:
                    violations += 1
        parts.append(f"{spec.model.name}: converged={r.converged}")
    ok = violations == 0 and all(r.converged for r in reports)
    detail = f"{violations} dominating perturbations out of {samples * len(magnitudes) * len(presets)}; " + ", ".join(parts)
    return CheckResult("pareto no-improvement", ok, float(violations), 0.0, detail, reports=reports)


@_timed
def check_projections(pairs: int = 100, seed: int = 2, tol: float = 1e-12) -> CheckResult:
    """Idempotence, nonexpansiveness and the variational inequality for each admissible set."""
    spec = problem("tiny_linear", nodes=[16], nt=8)
    g, t = spec.grid, spec.time
    rng = np.random.default_rng(seed)
    sets = [adm.FullSpace(), adm.L2Ball(1.0), adm.Box(0.5)]
    worst = 0.0
    box_exact = True
    for U in sets:
        for _ in range(pairs):
            s = 10.0 ** rng.uniform(-2, 1)
            v, w = _rng_control(spec, rng, s), _rng_control(spec, rng, s)
            pv, pw = U.project(v, g, t), U.project(w, g, t)
            scale = 1.0 + control_norm(g, t, v) + control_norm(g, t, w)
            idem = control_norm(g, t, U.project(pv, g, t) - pv)
            if isinstance(U, adm.Box) and not np.array_equal(U.project(pv, g, t), pv):
                box_exact = False
            expand = control_norm(g, t, pv - pw) - control_norm(g, t, v - w)
            vi = spacetime_inner_product(g, t, np.where(g.omega, v, 0.0) - pv, pw - pv)
            worst = max(worst, idem / scale, max(expand, 0.0) / scale, max(vi, 0.0) / scale**2)
            if not (U.contains(pv, g, t) and U.contains(pw, g, t)):
                worst = np.inf
    ok = worst <= tol and box_exact
    return CheckResult("projection properties", ok, worst, tol, f"{pairs} pairs x {len(sets)} sets; box idempotence exact: {box_exact}")


@_timed
def check_cg_rate(condition: float = 100.0, size: int = 200, seed: int = 3, factor: float = 10.0) -> CheckResult:
    """CG energy error stays under ``factor`` times the classical Chebyshev envelope."""
    rng = np.random.default_rng(seed)
    Q, _ = np.linalg.qr(rng.standard_normal((size, size)))
    eig = np.geomspace(1.0, condition, size)
    A = (Q * eig) @ Q.T
    x_true = rng.standard_normal(size)
    b = A @ x_true
    errs = []

    def energy(x):
        e = x - x_true
        return float(np.sqrt(e @ A @ e))

    e0 = energy(np.zeros(size))
    cg_generic(lambda x: A @ x, b, options=SolverOptions(tol=1e-14, max_iter=size),
               callback=lambda x: errs.append(energy(x) / e0))
    sq = np.sqrt(condition)
    rho = (sq - 1.0) / (sq + 1.0)
    env = rho ** np.arange(1, len(errs) + 1)
    ratio = float(np.max(np.array(errs) / env))
    return CheckResult("CG rate envelope", ratio <= factor, ratio, factor, f"{len(errs)} iterations, rate bound {rho:.4f}")


def residual_sweep(alphas=(0.05, 0.5, 0.95), mus=(1.0, 5.0, 10.0)) -> list[SolveReport]:
    """Semilinear and bilinear 2D desk solves with every applicable algorithm."""
    from .algorithms import solve

    reports = []
    for name, algos in (("test3", (3, 4)), ("test5", (5, 6))):
        for a in alphas:
            for m in mus:
                spec = problem(name, a, m)
                reports += [solve(spec, k) for k in algos]
    return reports


# -- presets ------------------------------------------------------------------------

def run_default(corrupt_adjoint: bool = False) -> list[CheckResult]:
    grad_fn = corrupted_gradient if corrupt_adjoint else gradient
    results = [check_gradients(gradient_fn=grad_fn), check_dense_oracle()]
    results.append(check_cross_algorithms(dim=1))
    results.append(check_residuals([r for c in results for r in c.reports]))
    results += [check_projections(), check_cg_rate()]
    return results


def run_acceptance(corrupt_adjoint: bool = False) -> list[CheckResult]:
    grad_fn = corrupted_gradient if corrupt_adjoint else gradient
    results = [
        check_gradients(gradient_fn=grad_fn),
        check_dense_oracle(),
        None,
        check_cross_algorithms(dim=2, nodes=24, nt=32),
        check_front_trends(),
        check_endpoints(),
        check_contraction(),
        check_no_improvement(),
        check_projections(),
        check_cg_rate(),
    ]
    pooled = [r for c in results if c is not None for r in c.reports] + residual_sweep()
    results[2] = check_residuals(pooled)
    return results


VALIDATION_PRESETS = {"default": run_default, "acceptance": run_acceptance}


def run_preset(name: str = "default", corrupt_adjoint: bool = False) -> list[CheckResult]:
    if name not in VALIDATION_PRESETS:
        raise KeyError(f"unknown validation preset {name!r}; choose from {', '.join(VALIDATION_PRESETS)}")
    return VALIDATION_PRESETS[name](corrupt_adjoint)
