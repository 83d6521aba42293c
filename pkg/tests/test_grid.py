import numpy as np
import pytest
from hypothesis import given, strategies as st

from paretoheat.grid import (
    Ball,
    Box,
    GridError,
    TimeGrid,
    build_grid,
    control_norm,
    grid_from_config,
    inner_product,
    norm,
    spacetime_inner_product,
)


def unit_interval(n):
    return build_grid([(0, 1)], [n], omega=Box((0,), (1,)), o1=Box((0,), (1,)), o2=Box((0,), (1,)))


def test_whole_interval_masks():
    g = unit_interval(5)
    assert g.mask.sum() == 3
    assert not g.mask[0] and not g.mask[-1]
    for m in (g.omega, g.o1, g.o2):
        assert np.array_equal(m, g.mask)
    assert np.allclose(g.weights[g.mask], 0.25)
    assert np.all(g.weights[~g.mask] == 0)


def test_sine_squared_integral():
    g = unit_interval(129)
    a = g.evaluate(lambda x: np.sin(np.pi * x))
    assert abs(inner_product(g, a, a) - 0.5) < 1e-3


def test_constant_on_unit_square_has_unit_area():
    n = 65
    g = build_grid([(0, 1), (0, 1)], [n, n], omega=Box((0, 0), (1, 1)), o1=Box((0, 0), (1, 1)), o2=Box((0, 0), (1, 1)))
    one = g.field(1.0)
    h = 1.0 / (n - 1)
    # interior rule misses one boundary layer of width h on each side
    assert abs(inner_product(g, one, one) - 1.0) < 4 * h


def test_disc_masks():
    g = build_grid([(-3, 3), (-3, 3)], [61, 61], domain=Ball((0, 0), 3.0),
                   omega=Box((-1.5, 0), (1.5, 1.5)), o1=Box((-1.5, 0), (0.3, 1.5)), o2=Box((-0.3, 0), (1.5, 1.5)))
    x, y = g.coords.T
    assert np.array_equal(g.mask, x**2 + y**2 < 9)
    inside = (np.abs(x) <= 1.5) & (y >= 0) & (y <= 1.5)
    assert np.array_equal(g.omega, g.mask & inside)
    overlap = g.o1 & g.o2
    assert overlap.any()
    assert np.all(np.abs(x[overlap]) <= 0.3 + 1e-12)


def test_cylinder_in_three_dimensions():
    g = build_grid([(-3, 3), (-3, 3), (0, 3)], [13, 13, 7], domain=Ball((0, 0), 3.0),
                   omega=Box((-1.5, 0, 0), (1.5, 1.5, 3)), o1=Box((-1.5, 0, 0), (0.3, 1.5, 3)),
                   o2=Box((-0.3, 0, 0), (1.5, 1.5, 3)))
    x, y, z = g.coords.T
    assert np.all(x[g.mask] ** 2 + y[g.mask] ** 2 < 9)
    assert np.all((z[g.mask] > 0) & (z[g.mask] < 3))
    assert g.laplacian.shape == (g.mask.sum(),) * 2


@pytest.mark.parametrize("kwargs, msg", [
    (dict(nodes=[2]), "at least 3"),
    (dict(domain=Ball((10.0,), 0.5)), "no interior"),
    (dict(omega=Box((5,), (6,))), "omega"),
    (dict(o1=Box((-3,), (-1,)), o2=Box((1,), (3,))), "overlap"),
])
def test_build_errors(kwargs, msg):
    args = dict(bounds=[(-3, 3)], nodes=[16], omega=Box((-1.5,), (1.5,)), o1=Box((-1.5,), (0.3,)), o2=Box((-0.3,), (1.5,)))
    args.update(kwargs)
    with pytest.raises(GridError, match=msg):
        build_grid(**args)


def test_grid_from_config_dicts():
    g = grid_from_config({
        "bounds": [[-3, 3]], "nodes": [16],
        "omega": {"shape": "box", "lo": [-1.5], "hi": [1.5]},
        "o1": {"shape": "box", "lo": [-1.5], "hi": [0.3]},
        "o2": {"shape": "box", "lo": [-0.3], "hi": [1.5]},
    })
    assert g.shape == (16,)
    with pytest.raises(GridError, match="shape"):
        grid_from_config({"bounds": [[0, 1]], "nodes": [5], "omega": {"shape": "star"}, "o1": {}, "o2": {}})


def test_laplacian_is_symmetric_positive(line_grid):
    A = line_grid.laplacian.toarray()
    assert np.allclose(A, A.T)
    assert np.linalg.eigvalsh(A).min() > 0


def test_mismatched_fields_rejected(line_grid, short_time):
    with pytest.raises(GridError):
        inner_product(line_grid, np.zeros(3), np.zeros(3))
    with pytest.raises(GridError):
        spacetime_inner_product(line_grid, short_time, np.zeros((2, line_grid.size)), np.zeros((2, line_grid.size)))


def test_time_grid():
    t = TimeGrid(0.5, 4)
    assert t.dt == 0.125
    assert np.allclose(t.times, [0, 0.125, 0.25, 0.375, 0.5])
    with pytest.raises(ValueError):
        TimeGrid(0.5, 0)


vectors = st.lists(st.floats(-1e3, 1e3), min_size=32, max_size=32).map(np.array)


@given(vectors, vectors, st.floats(-10, 10))
def test_inner_product_is_symmetric_and_bilinear(a, b, c):
    g = build_grid([(-3, 3)], [32], omega=Box((-1.5,), (1.5,)), o1=Box((-1.5,), (0.3,)), o2=Box((-0.3,), (1.5,)))
    ab = inner_product(g, a, b)
    assert ab == pytest.approx(inner_product(g, b, a), rel=1e-12, abs=1e-9)
    assert inner_product(g, c * a + b, b) == pytest.approx(c * ab + inner_product(g, b, b), rel=1e-9, abs=1e-6)
    assert norm(g, a) >= 0


def test_control_norm_only_sees_omega(line_grid, short_time):
    v = np.ones((short_time.nt, line_grid.size))
    inside = np.where(line_grid.omega, 1.0, 0.0)
    assert control_norm(line_grid, short_time, v) == pytest.approx(control_norm(line_grid, short_time, inside * v))
    expected = np.sqrt(short_time.T * line_grid.cell_volume * line_grid.omega.sum())
    assert control_norm(line_grid, short_time, v) == pytest.approx(expected)
