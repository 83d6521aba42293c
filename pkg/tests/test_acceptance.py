"""Acceptance gate: one test per criterion, each at its stated size and tolerance.

Run ``pytest tests/test_acceptance.py -v`` for the gate alone; a pass/fail
line per criterion is printed in the terminal summary (and by running this
file directly).
"""
import time

import pytest

from paretoheat import validation as V

LINES: dict[int, str] = {}
_CACHE: dict[str, V.CheckResult] = {}


def result(key: str) -> V.CheckResult:
    if key not in _CACHE:
        _CACHE[key] = {
            "gradients": lambda: V.check_gradients(nodes=32, nt=16, directions=20, tol=1e-6),
            "dense": lambda: V.check_dense_oracle(nodes=8, nt=8, mus=(1.0, 5.0, 10.0), alphas=(0.1, 0.5, 0.9), tol=1e-8),
            "cross": lambda: V.check_cross_algorithms(dim=2, nodes=24, nt=32, tol=1e-6),
            "front": lambda: V.check_front_trends("test1", alphas=[round(0.05 * k, 2) for k in range(1, 20)],
                                                  mus=(1.0, 5.0, 10.0), slack=1e-10),
            "endpoints": lambda: V.check_endpoints(tol=1e-7),
            "contraction": lambda: V.check_contraction("test3"),
            "pareto": lambda: V.check_no_improvement(samples=50, magnitudes=(1e-3, 1e-2, 1e-1)),
            "projections": lambda: V.check_projections(pairs=100, tol=1e-12),
            "cg": lambda: V.check_cg_rate(condition=100.0, factor=10.0),
        }[key]()
    return _CACHE[key]


def record(number: int, res: V.CheckResult, extra_ok: bool = True, note: str = ""):
    ok = res.passed and extra_ok
    LINES[number] = f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {res.name}: error {res.error:.3e} " \
                    f"(tol {res.tolerance:.1e}), {res.seconds:.1f} s{note}; {res.detail}"
    print(LINES[number])
    assert ok, LINES[number]


def test_criterion_01_gradient_correctness():
    res = result("gradients")
    record(1, res, res.seconds < 30, " (budget 30 s)")


def test_criterion_02_dense_oracle_equivalence():
    res = result("dense")
    record(2, res, res.seconds < 10, " (budget 10 s)")


def test_criterion_03_optimality_residual():
    t0 = time.perf_counter()
    pooled = [r for key in ("dense", "cross", "front", "endpoints", "contraction", "pareto") for r in result(key).reports]
    pooled += V.residual_sweep()
    res = V.check_residuals(pooled, tol=10 * 1e-8)
    res.seconds = time.perf_counter() - t0
    names = {r.algorithm for r in pooled if r.converged}
    expected = {"pareto_cg_linear", "fixed_point_semilinear", "newton_semilinear",
                "gradient_descent_bilinear", "fixed_point_bilinear"}
    record(3, res, expected <= names, f" (algorithms covered: {len(names & expected)}/5)")


def test_criterion_04_cross_algorithm_agreement():
    res = result("cross")
    record(4, res, res.seconds < 120, " (budget 120 s)")


def test_criterion_05_pareto_front_trends():
    res = result("front")
    record(5, res, res.seconds < 300, " (budget 300 s)")


def test_criterion_06_endpoint_degeneration():
    record(6, result("endpoints"))


def test_criterion_07_contraction_regime():
    record(7, result("contraction"))


def test_criterion_08_no_improvement():
    record(8, result("pareto"))


def test_criterion_09_projection_properties():
    record(9, result("projections"))


def test_criterion_10_cg_rate():
    record(10, result("cg"))


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
