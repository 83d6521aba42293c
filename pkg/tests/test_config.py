import copy

import numpy as np
import pytest

from paretoheat.config import INITIAL_DATA, PRESETS, ConfigError, InitialField, load_config, parse_config, preset, resolve
from paretoheat.models import Bilinear, Linear, Semilinear

BASE = {
    "geometry": {
        "bounds": [[-3.0, 3.0]],
        "nodes": [16],
        "omega": {"shape": "box", "lo": [-1.5], "hi": [1.5]},
        "o1": {"shape": "box", "lo": [-1.5], "hi": [0.3]},
        "o2": {"shape": "box", "lo": [-0.3], "hi": [1.5]},
    },
    "model": {"kind": "linear", "mu": [1.0, 5.0], "alpha": [0.25, 0.75]},
}


def with_changes(section, **kw):
    raw = copy.deepcopy(BASE)
    raw.setdefault(section, {}).update(kw)
    return raw


def test_defaults():
    cfg = parse_config(copy.deepcopy(BASE))
    assert cfg.T == 0.5 and cfg.nt == 64
    assert cfg.algorithm == 2
    assert cfg.solver.tol == 1e-8
    assert not cfg.output.timing
    specs = cfg.problems()
    assert [(s.alpha, s.mu) for s in specs] == [(0.25, 1.0), (0.25, 5.0), (0.75, 1.0), (0.75, 5.0)]
    assert np.all(specs[0].u0 == 0)


@pytest.mark.parametrize("section, change, path", [
    ("model", {"mu": [1.0, 0.0]}, "model.mu[1]"),
    ("model", {"alpha": [1.2]}, "model.alpha[0]"),
    ("model", {"alpha": ["x"]}, "model.alpha[0]"),
    ("model", {"kind": "quadratic"}, "model.kind"),
    ("model", {"reaction": "cubic"}, "model.reaction"),
    ("time", {"nt": 0}, "time.nt"),
    ("time", {"T": "long"}, "time.T"),
    ("solver", {"algorithm": 5}, "solver.algorithm"),
    ("solver", {"algorithm": 9}, "solver.algorithm"),
    ("solver", {"tol": -1.0}, "solver"),
    ("solver", {"typo": 1}, "solver"),
    ("initial", {"u01": "spiral"}, "initial.u01"),
    ("admissible", {"kind": "box", "R": -2.0}, "admissible"),
    ("output", {"workers": 0}, "output.workers"),
    ("geometry", {"nodes": [2]}, "geometry"),
])
def test_errors_name_the_field(section, change, path):
    with pytest.raises(ConfigError) as info:
        parse_config(with_changes(section, **change))
    assert path in str(info.value)


def test_mu_zero_message_names_the_regime():
    with pytest.raises(ConfigError, match="mu > 0"):
        parse_config(with_changes("model", mu=[0.0]))


def test_missing_sections():
    with pytest.raises(ConfigError, match="model"):
        parse_config({"geometry": BASE["geometry"]})
    with pytest.raises(ConfigError, match="geometry.o2"):
        raw = copy.deepcopy(BASE)
        del raw["geometry"]["o2"]
        parse_config(raw)
    with pytest.raises(ConfigError, match="unknown sections"):
        parse_config({**BASE, "plots": {}})


def test_toml_file_roundtrip(tmp_path):
    path = tmp_path / "run.toml"
    path.write_text("""
[geometry]
bounds = [[-3.0, 3.0]]
nodes = [16]
omega = { shape = "box", lo = [-1.5], hi = [1.5] }
o1 = { shape = "box", lo = [-1.5], hi = [0.3] }
o2 = { shape = "box", lo = [-0.3], hi = [1.5] }

[time]
nt = 8

[model]
kind = "semilinear"
reaction = "sine"
dF_max = 4.0
mu = 5
alpha = [0.5]

[initial]
u01 = "cone"
u02 = { name = "neg_cone", scale = 2.0 }

[solver]
algorithm = 4
newton_terminal = "unweighted"
""")
    cfg = load_config(path)
    assert cfg.algorithm == 4 and cfg.solver.newton_terminal == "unweighted"
    assert isinstance(cfg.model(), Semilinear)
    spec = cfg.problems()[0]
    assert np.allclose(spec.u02, -2 * spec.u01)
    assert resolve(str(path)).source == str(path)


def test_toml_syntax_error_reports_line(tmp_path):
    path = tmp_path / "bad.toml"
    path.write_text("[model]\nkind = \n")
    with pytest.raises(ConfigError, match="line 2"):
        load_config(path)
    with pytest.raises(ConfigError, match="missing.toml"):
        load_config(tmp_path / "missing.toml")


def test_initial_catalogue_values():
    coords = np.array([[0.0, 0.0, 1.0], [1.0, 1.0, 2.0], [0.0, 3.0, 0.5]])
    assert np.allclose(INITIAL_DATA["cone"](coords[:, :2]), [3.0, 3 - np.sqrt(2), 0.0])
    assert np.allclose(INITIAL_DATA["cone_z"](coords), [3.0, (3 - np.sqrt(2)) * 2, 0.0])
    assert np.allclose(INITIAL_DATA["neg_cone_z"](coords), -INITIAL_DATA["cone_z"](coords))
    r = np.sqrt(2)
    assert INITIAL_DATA["wave2d"](coords[1:2, :2])[0] == pytest.approx(np.sin(2 * np.pi / 3 * r))
    assert INITIAL_DATA["wave3d"](coords[1:2])[0] == pytest.approx(4 * np.sin(2 * np.pi / 3 * 2 * r))
    with pytest.raises(ConfigError):
        INITIAL_DATA["wave3d"](coords[:, :2])


def test_initial_field_scale():
    cfg = preset("tiny_linear")
    g = cfg.build_grid()
    assert np.allclose(InitialField("cone", 0.5).evaluate(g), 0.5 * InitialField("cone").evaluate(g))


@pytest.mark.parametrize("name", list(PRESETS))
def test_presets_build(name):
    cfg = preset(name)
    expected = {"linear": Linear, "semilinear": Semilinear, "bilinear": Bilinear}[cfg.kind]
    assert isinstance(cfg.model(), expected)
    spec = cfg.single(0.5, 5.0).problems()[0]
    assert spec.grid.omega.any()
    if name.startswith("test"):
        assert len(cfg.alpha) == 19 and cfg.mu == (1.0, 5.0, 10.0)


def test_full_resolution_is_finer():
    assert preset("test1", full_resolution=True).geometry["nodes"] == [48, 48]
    assert preset("test1", full_resolution=True).nt == 64
    assert preset("test2", full_resolution=True).geometry["nodes"] == [32, 32, 17]
    with pytest.raises(ConfigError, match="unknown preset"):
        preset("test9")
