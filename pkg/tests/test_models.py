import numpy as np
import pytest
import scipy.sparse as sp

from paretoheat.grid import Box, TimeGrid, build_grid
from paretoheat.models import (
    Bilinear,
    IndefiniteStepError,
    Linear,
    Semilinear,
    SolverError,
    StepOperator,
    forward,
    forward_bilinear,
    forward_linear,
    forward_semilinear,
    linear_reaction,
    sine_reaction,
    solve_spd,
    zero_reaction,
)


@pytest.fixture
def unit_grid():
    return build_grid([(0, 1)], [33], omega=Box((0,), (1,)), o1=Box((0,), (1,)), o2=Box((0,), (1,)))


def discrete_eigenvalue(grid, k):
    h = grid.spacing[0]
    return 4.0 / h**2 * np.sin(k * np.pi * h / 2) ** 2


@pytest.mark.parametrize("k", [1, 3])
def test_eigenmode_decays_by_implicit_euler_factor(unit_grid, k):
    t = TimeGrid(0.5, 20)
    u0 = unit_grid.evaluate(lambda x: np.sin(k * np.pi * x))
    u = forward_linear(unit_grid, t, u0)
    factor = 1.0 / (1.0 + t.dt * discrete_eigenvalue(unit_grid, k))
    for n in (1, 7, 20):
        assert np.allclose(u[n], factor**n * u0, atol=1e-12)


def test_eigenvalue_approaches_continuum(unit_grid):
    assert discrete_eigenvalue(unit_grid, 1) == pytest.approx(np.pi**2, rel=1e-3)


def test_linear_superposition(line_grid, short_time, rng):
    def rnd():
        return line_grid.field(rng.standard_normal(line_grid.size))

    def ctrl():
        return rng.standard_normal((short_time.nt, line_grid.size))

    a0, b0, va, vb = rnd(), rnd(), ctrl(), ctrl()
    lhs = forward_linear(line_grid, short_time, 2 * a0 - b0, 2 * va - vb)
    rhs = 2 * forward_linear(line_grid, short_time, a0, va) - forward_linear(line_grid, short_time, b0, vb)
    assert np.allclose(lhs, rhs, atol=1e-12)


def test_trajectory_respects_dirichlet_mask(line_grid, short_time, rng):
    u = forward_linear(line_grid, short_time, rng.standard_normal(line_grid.size), rng.standard_normal((short_time.nt, line_grid.size)))
    assert u.shape == (short_time.nt + 1, line_grid.size)
    assert np.all(u[:, ~line_grid.mask] == 0)


def test_control_outside_omega_is_ignored(line_grid, short_time, rng):
    v = rng.standard_normal((short_time.nt, line_grid.size))
    inside = np.where(line_grid.omega, v, 0.0)
    assert np.array_equal(forward_linear(line_grid, short_time, 0, v), forward_linear(line_grid, short_time, 0, inside))


def test_zero_reaction_matches_linear(line_grid, short_time, rng):
    u0 = rng.standard_normal(line_grid.size)
    v = rng.standard_normal((short_time.nt, line_grid.size))
    assert np.allclose(forward_semilinear(line_grid, short_time, u0, v, zero_reaction()),
                       forward_linear(line_grid, short_time, u0, v), atol=1e-14)


def test_linear_reaction_is_explicit(line_grid, short_time, rng):
    c = 2.0
    u0 = line_grid.field(rng.standard_normal(line_grid.size))
    u = forward_semilinear(line_grid, short_time, u0, None, linear_reaction(c))
    # explicit reaction: u[n+1] = S (1 - dt c) u[n], so it equals heat flow times (1 - dt c)^n
    heat = forward_linear(line_grid, short_time, u0)
    scale = (1 - short_time.dt * c) ** np.arange(short_time.nt + 1)
    assert np.allclose(u, scale[:, None] * heat, atol=1e-12)


def test_constant_bilinear_control_shifts_spectrum(unit_grid):
    t = TimeGrid(0.25, 10)
    c = 3.0
    u0 = unit_grid.evaluate(lambda x: np.sin(np.pi * x))
    u = forward_bilinear(unit_grid, t, u0, np.full((t.nt, unit_grid.size), c))
    factor = 1.0 / (1.0 + t.dt * (discrete_eigenvalue(unit_grid, 1) + c))
    assert np.allclose(u[-1], factor**t.nt * u0, atol=1e-12)


def test_bilinear_with_zero_control_is_heat_flow(line_grid, short_time, rng):
    u0 = rng.standard_normal(line_grid.size)
    assert np.allclose(forward(line_grid, short_time, Bilinear(), u0), forward(line_grid, short_time, Linear(), u0))


def test_indefinite_bilinear_step_reports_level(line_grid, short_time):
    v = np.zeros((short_time.nt, line_grid.size))
    v[2, line_grid.omega_index[0]] = -2.0 / short_time.dt
    with pytest.raises(IndefiniteStepError) as info:
        forward_bilinear(line_grid, short_time, 1.0, v)
    assert info.value.level == 3


def test_semilinear_blowup_is_reported(line_grid, short_time):
    explosive = Semilinear(lambda s: -s * s, lambda s: -2 * s, lambda s: -2 + 0 * s, "explosive")
    with pytest.raises(SolverError):
        forward_semilinear(line_grid, short_time, line_grid.field(1e100), None, explosive)


def test_sine_reaction_derivatives():
    m = sine_reaction()
    assert m.check_derivatives()
    s = np.linspace(-4, 4, 9)
    assert np.allclose(m.F(s), s * (1 + np.sin(s)))
    clamped = sine_reaction(dF_max=1.5)
    assert np.all(np.abs(clamped.dF(np.linspace(-20, 20, 101))) <= 1.5)


def test_step_operator_inverts_its_matrix(line_grid, rng):
    op = StepOperator(line_grid, 0.01, reaction=np.abs(rng.standard_normal(line_grid.size)))
    x = line_grid.field(rng.standard_normal(line_grid.size))
    assert np.allclose(op.solve(op.apply(x)), x, atol=1e-12)


def test_solve_spd(rng):
    n = 40
    Q = rng.standard_normal((n, n))
    A = sp.csr_matrix(Q @ Q.T + n * np.eye(n))
    b = rng.standard_normal(n)
    x = solve_spd(A, b, tol=1e-12)
    assert np.allclose(A @ x, b, atol=1e-9)
    assert np.array_equal(solve_spd(A, np.zeros(n)), np.zeros(n))
    with pytest.raises(SolverError):
        solve_spd(A, b, tol=1e-14, maxiter=1)
