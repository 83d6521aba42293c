import numpy as np
import pytest
from hypothesis import settings

from paretoheat.grid import Box, TimeGrid, build_grid
from paretoheat.validation import problem

settings.register_profile("ci", max_examples=60, deadline=None)
settings.load_profile("ci")


@pytest.fixture
def line_grid():
    return build_grid([(-3, 3)], [32], omega=Box((-1.5,), (1.5,)), o1=Box((-1.5,), (0.3,)), o2=Box((-0.3,), (1.5,)))


@pytest.fixture
def short_time():
    return TimeGrid(0.5, 16)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(params=["tiny_linear", "tiny_semilinear", "tiny_bilinear"])
def tiny_spec(request):
    return problem(request.param, alpha=0.4, mu=1.0)


def random_control(spec, rng, scale=1.0):
    g, t = spec.grid, spec.time
    return np.where(g.omega, scale * rng.standard_normal((t.nt, g.size)), 0.0)


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    if mod is None or not getattr(mod, "LINES", None):
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(mod.LINES):
        terminalreporter.write_line(mod.LINES[k])
