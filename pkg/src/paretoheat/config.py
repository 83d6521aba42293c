"""Experiment configuration: TOML files, the initial-data catalogue and named presets.

A config file has the sections ``geometry``, ``time``, ``model``,
``initial``, ``solver``, ``admissible`` and ``output``::

    [geometry]
    bounds = [[-3.0, 3.0], [-3.0, 3.0]]
    nodes = [24, 24]
    domain = { shape = "ball", center = [0.0, 0.0], radius = 3.0 }
    omega = { shape = "box", lo = [-1.5, 0.0], hi = [1.5, 1.5] }
    o1 = { shape = "box", lo = [-1.5, 0.0], hi = [0.3, 1.5] }
    o2 = { shape = "box", lo = [-0.3, 0.0], hi = [1.5, 1.5] }

    [time]
    T = 0.5
    nt = 32

    [model]
    kind = "linear"            # linear | semilinear | bilinear
    reaction = "sine"          # semilinear only: sine | zero | linear
    dF_max = 5.0               # optional clamp on F'
    mu = [1.0, 5.0, 10.0]
    alpha = [0.05, 0.5, 0.95]

    [initial]
    u0 = "zero"
    u01 = "cone"
    u02 = { name = "neg_cone", scale = 1.0 }

    [solver]
    algorithm = 2
    tol = 1e-8
    max_iter = 500

    [admissible]
    kind = "full"              # full | l2ball | box
    R = 10.0

    [output]
    csv = "front.csv"
    fields = false
    plot_script = false
    timing = false              # wall_ms column; off keeps the CSV bitwise reproducible
    workers = 1

Only ``geometry`` and ``model`` are mandatory; every other key has a default.
"""
from __future__ import annotations

import copy
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Callable, Mapping

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import admissible as adm
from .algorithms import COMPATIBLE, SolverOptions
from .functionals import ProblemSpec
from .grid import GridError, SpatialGrid, TimeGrid, build_grid
from .models import Bilinear, Linear, ModelKind, linear_reaction, sine_reaction, zero_reaction


class ConfigError(ValueError):
    pass


# -- initial data ----------------------------------------------------------

def _r(c, axes):
    return np.sqrt(np.sum(c[:, :axes] ** 2, axis=1))


def _xy(c):
    x = c[:, 0]
    y = c[:, 1] if c.shape[1] > 1 else np.ones_like(x)
    return x, y


def _wave2d(c):
    x, y = _xy(c)
    return x**3 * y**3 * np.sin(2 * np.pi / 3 * _r(c, 2))


def _wave3d(c):
    if c.shape[1] < 3:
        raise ConfigError("wave3d needs a three-dimensional grid")
    x, y, z = c[:, 0], c[:, 1], c[:, 2]
    return x**3 * y**3 * z**2 * np.sin(2 * np.pi / 3 * z * _r(c, 2))


def _cone_z(c):
    if c.shape[1] < 3:
        raise ConfigError("cone_z needs a three-dimensional grid")
    return (3.0 - _r(c, 2)) * c[:, 2]


INITIAL_DATA: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "zero": lambda c: np.zeros(len(c)),
    "cone": lambda c: 3.0 - _r(c, c.shape[1]),
    "neg_cone": lambda c: _r(c, c.shape[1]) - 3.0,
    "wave2d": _wave2d,
    "wave3d": _wave3d,
    "cone_z": _cone_z,
    "neg_cone_z": lambda c: -_cone_z(c),
    "sine": lambda c: np.prod(np.cos(np.pi * c / 6.0), axis=1),
}


@dataclass(frozen=True)
class InitialField:
    name: str = "zero"
    scale: float = 1.0

    def evaluate(self, grid: SpatialGrid) -> np.ndarray:
        return self.scale * grid.field(INITIAL_DATA[self.name](grid.coords))


# -- config types ------------------------------------------------------------

@dataclass(frozen=True)
class OutputConfig:
    csv: str | None = None
    fields: bool = False
    plot_script: bool = False
    timing: bool = False
    workers: int = 1


@dataclass(frozen=True)
class ExperimentConfig:
    geometry: dict
    T: float
    nt: int
    kind: str
    mu: tuple[float, ...]
    alpha: tuple[float, ...]
    algorithm: int
    reaction: str = "sine"
    dF_max: float | None = None
    initial: dict[str, InitialField] = field(default_factory=dict)
    solver: SolverOptions = field(default_factory=SolverOptions)
    admissible: dict = field(default_factory=dict)
    output: OutputConfig = field(default_factory=OutputConfig)
    source: str = "<dict>"

    def build_grid(self) -> SpatialGrid:
        g = self.geometry
        return build_grid(g["bounds"], g["nodes"], omega=g["omega"], o1=g["o1"], o2=g["o2"], domain=g.get("domain"))

    def model(self) -> ModelKind:
        if self.kind == "linear":
            return Linear()
        if self.kind == "bilinear":
            return Bilinear()
        if self.reaction == "zero":
            return zero_reaction()
        if self.reaction == "linear":
            return linear_reaction(1.0)
        return sine_reaction(self.dF_max)

    def problems(self) -> list[ProblemSpec]:
        """One spec per ``(alpha, mu)`` cell, alpha-major."""
        grid = self.build_grid()
        time = TimeGrid(self.T, self.nt)
        model = self.model()
        U = adm.from_config(self.admissible)
        data = {k: self.initial.get(k, InitialField()).evaluate(grid) for k in ("u0", "u01", "u02")}
        base = ProblemSpec(grid, time, model, self.mu[0], self.alpha[0], admissible=U, **data)
        return [base.with_(alpha=a, mu=m) for a in self.alpha for m in self.mu]

    def single(self, alpha: float | None = None, mu: float | None = None) -> "ExperimentConfig":
        a = self.alpha if alpha is None else (alpha,)
        m = self.mu if mu is None else (mu,)
        cfg = replace(self, alpha=tuple(a), mu=tuple(m))
        _check_cells(cfg)
        return cfg


# -- parsing --------------------------------------------------------------------

def _get(d: Mapping, key: str, path: str, kind, default=..., required=False):
    if key not in d:
        if required or default is ...:
            raise ConfigError(f"{path}.{key}: missing required field")
        return default
    value = d[key]
    try:
        if kind is float:
            if isinstance(value, bool):
                raise TypeError
            return float(value)
        if kind is int:
            if isinstance(value, bool) or int(value) != value:
                raise TypeError
            return int(value)
        if kind is bool:
            if not isinstance(value, bool):
                raise TypeError
            return value
        if kind is str:
            if not isinstance(value, str):
                raise TypeError
            return value
    except (TypeError, ValueError):
        raise ConfigError(f"{path}.{key}: expected {kind.__name__}, got {value!r}") from None
    return value


def _float_list(d: Mapping, key: str, path: str) -> tuple[float, ...]:
    value = d.get(key)
    if value is None:
        raise ConfigError(f"{path}.{key}: missing required field")
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        value = [value]
    if not isinstance(value, list) or not value:
        raise ConfigError(f"{path}.{key}: expected a nonempty list of numbers")
    out = []
    for i, x in enumerate(value):
        if isinstance(x, bool) or not isinstance(x, (int, float)):
            raise ConfigError(f"{path}.{key}[{i}]: expected a number, got {x!r}")
        out.append(float(x))
    return tuple(out)


def _check_cells(cfg: ExperimentConfig):
    for i, a in enumerate(cfg.alpha):
        if not 0.0 <= a <= 1.0:
            raise ConfigError(f"model.alpha[{i}]: {a} is outside [0, 1]")
    for i, m in enumerate(cfg.mu):
        if m <= 0.0:
            raise ConfigError(
                f"model.mu[{i}]: mu = {m} is not supported; the solvers and the optimality "
                "residual need mu > 0 (the exact-controllability limit mu = 0 is out of scope)"
            )


def _parse_initial(d: Mapping) -> dict[str, InitialField]:
    out = {}
    for key in ("u0", "u01", "u02"):
        path = f"initial.{key}"
        value = d.get(key, "zero")
        if isinstance(value, str):
            name, scale = value, 1.0
        elif isinstance(value, Mapping):
            name = _get(value, "name", path, str, required=True)
            scale = _get(value, "scale", path, float, 1.0)
        else:
            raise ConfigError(f"{path}: expected a catalogue name or a table with name and scale")
        if name not in INITIAL_DATA:
            raise ConfigError(f"{path}: unknown initial datum {name!r}; choose from {', '.join(INITIAL_DATA)}")
        out[key] = InitialField(name, scale)
    extra = set(d) - {"u0", "u01", "u02"}
    if extra:
        raise ConfigError(f"initial: unknown keys {sorted(extra)}")
    return out


_SECTIONS = {"geometry", "time", "model", "initial", "solver", "admissible", "output"}


def parse_config(raw: Mapping[str, Any], source: str = "<dict>") -> ExperimentConfig:
    unknown = set(raw) - _SECTIONS
    if unknown:
        raise ConfigError(f"unknown sections {sorted(unknown)}")
    for sec in ("geometry", "model"):
        if sec not in raw:
            raise ConfigError(f"{sec}: missing required section")
    geo = dict(raw["geometry"])
    for key in ("bounds", "nodes", "omega", "o1", "o2"):
        if key not in geo:
            raise ConfigError(f"geometry.{key}: missing required field")

    time = raw.get("time", {})
    T = _get(time, "T", "time", float, 0.5)
    nt = _get(time, "nt", "time", int, 64)
    if T <= 0:
        raise ConfigError(f"time.T: must be positive, got {T}")
    if nt < 1:
        raise ConfigError(f"time.nt: must be at least 1, got {nt}")

    model = raw["model"]
    kind = _get(model, "kind", "model", str, required=True)
    if kind not in ("linear", "semilinear", "bilinear"):
        raise ConfigError(f"model.kind: unknown model {kind!r} (expected linear, semilinear or bilinear)")
    reaction = _get(model, "reaction", "model", str, "sine")
    if reaction not in ("sine", "zero", "linear"):
        raise ConfigError(f"model.reaction: unknown reaction {reaction!r} (expected sine, zero or linear)")
    dF_max = _get(model, "dF_max", "model", float, None)
    mu = _float_list(model, "mu", "model")
    alpha = _float_list(model, "alpha", "model")

    solver = dict(raw.get("solver", {}))
    algorithm = _get(solver, "algorithm", "solver", int, {"linear": 2, "semilinear": 3, "bilinear": 6}[kind])
    if algorithm not in COMPATIBLE:
        raise ConfigError(f"solver.algorithm: {algorithm} is not a solver id (expected 2 to 6)")
    if kind != COMPATIBLE[algorithm].name:
        raise ConfigError(
            f"solver.algorithm: algorithm {algorithm} needs the {COMPATIBLE[algorithm].name} model, config has {kind!r}"
        )
    opts = dict(
        tol=_get(solver, "tol", "solver", float, 1e-8),
        max_iter=_get(solver, "max_iter", "solver", int, 500),
        step=_get(solver, "step", "solver", float, None),
        damping=_get(solver, "damping", "solver", bool, False),
        newton_terminal=_get(solver, "newton_terminal", "solver", str, "weighted"),
        inner_tol=_get(solver, "inner_tol", "solver", float, 1e-12),
    )
    extra = set(solver) - set(opts) - {"algorithm"}
    if extra:
        raise ConfigError(f"solver: unknown keys {sorted(extra)}")
    try:
        options = SolverOptions(**opts)
    except ValueError as exc:
        raise ConfigError(f"solver: {exc}") from None

    admissible = dict(raw.get("admissible", {}))
    try:
        adm.from_config(admissible)
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"admissible: {exc}") from None

    out = raw.get("output", {})
    output = OutputConfig(
        csv=_get(out, "csv", "output", str, None),
        fields=_get(out, "fields", "output", bool, False),
        plot_script=_get(out, "plot_script", "output", bool, False),
        timing=_get(out, "timing", "output", bool, False),
        workers=_get(out, "workers", "output", int, 1),
    )
    if output.workers < 1:
        raise ConfigError(f"output.workers: must be at least 1, got {output.workers}")

    cfg = ExperimentConfig(
        geometry=geo, T=T, nt=nt, kind=kind, mu=mu, alpha=alpha, algorithm=algorithm,
        reaction=reaction, dF_max=dF_max, initial=_parse_initial(raw.get("initial", {})),
        solver=options, admissible=admissible, output=output, source=source,
    )
    _check_cells(cfg)
    try:
        cfg.build_grid()
    except (GridError, KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"geometry: {exc}") from None
    return cfg


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    try:
        return parse_config(raw, str(path))
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from None


# -- presets -----------------------------------------------------------------------

ALPHA_GRID = [round(0.05 * k, 2) for k in range(1, 20)]

_BOX = lambda lo, hi: {"shape": "box", "lo": lo, "hi": hi}


def _geometry_1d(nodes=32):
    return {
        "bounds": [[-3.0, 3.0]],
        "nodes": [nodes],
        "omega": _BOX([-1.5], [1.5]),
        "o1": _BOX([-1.5], [0.3]),
        "o2": _BOX([-0.3], [1.5]),
    }


def _geometry_2d(nodes=24):
    return {
        "bounds": [[-3.0, 3.0], [-3.0, 3.0]],
        "nodes": [nodes, nodes],
        "domain": {"shape": "ball", "center": [0.0, 0.0], "radius": 3.0},
        "omega": _BOX([-1.5, 0.0], [1.5, 1.5]),
        "o1": _BOX([-1.5, 0.0], [0.3, 1.5]),
        "o2": _BOX([-0.3, 0.0], [1.5, 1.5]),
    }


def _geometry_3d(nodes=24):
    return {
        "bounds": [[-3.0, 3.0], [-3.0, 3.0], [0.0, 3.0]],
        "nodes": [nodes, nodes, max(nodes // 2 + 1, 5)],
        "domain": {"shape": "ball", "center": [0.0, 0.0], "radius": 3.0},
        "omega": _BOX([-1.5, 0.0, 0.0], [1.5, 1.5, 3.0]),
        "o1": _BOX([-1.5, 0.0, 0.0], [0.3, 1.5, 3.0]),
        "o2": _BOX([-0.3, 0.0, 0.0], [1.5, 1.5, 3.0]),
    }


def _preset(desc, geometry, kind, algorithm, initial, nt=32, admissible=None, **model):
    raw = {
        "geometry": geometry,
        "time": {"T": 0.5, "nt": nt},
        "model": {"kind": kind, "mu": [1.0, 5.0, 10.0], "alpha": list(ALPHA_GRID), **model},
        "initial": initial,
        "solver": {"algorithm": algorithm},
    }
    if admissible:
        raw["admissible"] = admissible
    return desc, raw


_CONES = {"u0": "zero", "u01": "cone", "u02": "neg_cone"}
_WAVE2D = {"u0": "wave2d", "u01": "cone", "u02": "neg_cone"}
_WAVE3D = {"u0": "wave3d", "u01": "cone_z", "u02": "neg_cone_z"}
# active for mu <= 1 on the 2D preset; dt * R stays far below 1
_BILINEAR_BOX = {"kind": "box", "R": 1.0}

PRESETS: dict[str, tuple[str, dict]] = dict(
    test1=_preset("linear, 2D ball, pareto CG", _geometry_2d(), "linear", 2, _CONES),
    test2=_preset("linear, 3D cylinder, pareto CG", _geometry_3d(), "linear", 2, _CONES, nt=16),
    test3=_preset("semilinear F(s) = s(1 + sin s), 2D ball, fixed point", _geometry_2d(), "semilinear", 3, _CONES),
    test4=_preset("semilinear F(s) = s(1 + sin s), 3D cylinder, fixed point", _geometry_3d(), "semilinear", 3, _CONES, nt=16),
    test5=_preset("bilinear, 2D ball, projected gradient, box R = 1", _geometry_2d(), "bilinear", 5, _WAVE2D, admissible=_BILINEAR_BOX),
    test6=_preset("bilinear, 3D cylinder, projected gradient, box R = 1", _geometry_3d(), "bilinear", 5, _WAVE3D, nt=16, admissible=_BILINEAR_BOX),
    tiny_linear=_preset("linear, 1D interval, pareto CG", _geometry_1d(), "linear", 2, _CONES, nt=16),
    tiny_semilinear=_preset("semilinear sine reaction, 1D interval, fixed point", _geometry_1d(), "semilinear", 3, _CONES, nt=16),
    tiny_bilinear=_preset(
        "bilinear, 1D interval, fixed point, box R = 1", _geometry_1d(), "bilinear", 6,
        {"u0": {"name": "sine", "scale": 2.0}, "u01": "cone", "u02": "neg_cone"}, nt=16, admissible=_BILINEAR_BOX,
    ),
)

# finer grids for the front figures; not tuned for runtime
_FULL_RES = {1: (64, 64), 2: (48, 64), 3: (32, 32)}


def preset(name: str, full_resolution: bool = False) -> ExperimentConfig:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(PRESETS)}")
    raw = copy.deepcopy(PRESETS[name][1])
    if full_resolution:
        dim = len(raw["geometry"]["bounds"])
        n, nt = _FULL_RES[dim]
        raw["geometry"]["nodes"] = {1: [n], 2: [n, n], 3: [n, n, n // 2 + 1]}[dim]
        raw["time"]["nt"] = nt
    return parse_config(raw, f"preset:{name}")


def resolve(target: str, full_resolution: bool = False) -> ExperimentConfig:
    """Load ``target`` as a file path, falling back to a preset name."""
    if Path(target).exists() or target not in PRESETS:
        return load_config(target)
    return preset(target, full_resolution)
