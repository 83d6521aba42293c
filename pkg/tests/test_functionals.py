import numpy as np
import pytest

from conftest import random_control
from paretoheat.admissible import L2Ball
from paretoheat.functionals import (
    ProblemSpec,
    SpecError,
    blended_cost,
    evaluate_costs,
    gradient,
    optimality_residual,
    single_objective_gradients,
)
from paretoheat.grid import control_norm
from paretoheat.models import Bilinear
from paretoheat.oracle import fd_gradient
from paretoheat.validation import problem


def test_per_coordinate_fd_gradient(rng):
    for name in ("tiny_linear", "tiny_semilinear", "tiny_bilinear"):
        spec = problem(name, alpha=0.3, mu=2.0, nodes=[12], nt=4)
        v = random_control(spec, rng)
        g = gradient(spec, v)
        fd = fd_gradient(spec, v)
        g_, t = spec.grid, spec.time
        assert control_norm(g_, t, g - fd) <= 1e-6 * control_norm(g_, t, g), name


def test_central_difference_error_is_second_order(rng):
    spec = problem("tiny_semilinear", alpha=0.5, mu=1.0, nodes=[12], nt=4)
    v = random_control(spec, rng, 0.5)
    g = gradient(spec, v)
    g_, t = spec.grid, spec.time
    errs = [control_norm(g_, t, fd_gradient(spec, v, eps) - g) for eps in (4e-2, 2e-2, 1e-2)]
    assert 3.0 < errs[0] / errs[1] < 5.0
    assert 3.0 < errs[1] / errs[2] < 5.0


def test_cost_pair_decomposition(tiny_spec, rng):
    v = random_control(tiny_spec, rng, 0.1)
    c = evaluate_costs(tiny_spec, v)
    assert c.decomposition_error() < 1e-14
    assert blended_cost(tiny_spec, v) == pytest.approx(c.blended(tiny_spec.alpha))


def test_blended_gradient_is_convex_combination(tiny_spec, rng):
    v = random_control(tiny_spec, rng, 0.1)
    g1, g2 = single_objective_gradients(tiny_spec, v)
    a = tiny_spec.alpha
    assert np.allclose(gradient(tiny_spec, v), a * g1 + (1 - a) * g2, atol=1e-12)


def test_zero_misfit_costs_nothing(line_grid, short_time):
    from paretoheat.models import Linear

    zero = np.zeros(line_grid.size)
    spec = ProblemSpec(line_grid, short_time, Linear(), 1.0, 0.5, zero, zero, zero)
    v = spec.zero_control()
    c = evaluate_costs(spec, v)
    assert c.J1 == c.J2 == 0.0
    assert optimality_residual(spec, v) == 0.0


def test_gradient_ignores_values_outside_omega(tiny_spec, rng):
    v = random_control(tiny_spec, rng, 0.1)
    noisy = v + np.where(tiny_spec.grid.omega, 0.0, 5.0)
    assert np.allclose(gradient(tiny_spec, v), gradient(tiny_spec, noisy))
    assert np.all(gradient(tiny_spec, v)[:, ~tiny_spec.grid.omega] == 0)


def test_targets_are_uncontrolled_flows(tiny_spec):
    u1T, u2T = tiny_spec.targets
    if tiny_spec.model.name != "semilinear":
        # the two catalogue data are negatives of each other and the flow is linear
        assert np.allclose(u1T, -u2T)
    assert np.all(u1T[~tiny_spec.grid.mask] == 0)


def test_spec_validation(line_grid, short_time):
    from paretoheat.models import Linear

    z = np.zeros(line_grid.size)
    with pytest.raises(SpecError, match="alpha"):
        ProblemSpec(line_grid, short_time, Linear(), 1.0, 1.5, z, z, z)
    with pytest.raises(SpecError, match="mu"):
        ProblemSpec(line_grid, short_time, Linear(), -1.0, 0.5, z, z, z)
    with pytest.raises(SpecError, match="bilinear"):
        ProblemSpec(line_grid, short_time, Bilinear(), 0.0, 0.5, z, z, z)
    with pytest.raises(SpecError, match="size"):
        ProblemSpec(line_grid, short_time, Linear(), 1.0, 0.5, z[:3], z, z)
    spec = ProblemSpec(line_grid, short_time, Linear(), 0.0, 0.5, z, z, z)
    with pytest.raises(SpecError, match="mu > 0"):
        optimality_residual(spec, spec.zero_control())


def test_inadmissible_control_is_flagged(rng):
    spec = problem("tiny_linear").with_(admissible=L2Ball(1e-3))
    v = random_control(spec, rng)
    with pytest.raises(SpecError, match="admissible"):
        evaluate_costs(spec, v)
    evaluate_costs(spec, v, check_admissible=False)
