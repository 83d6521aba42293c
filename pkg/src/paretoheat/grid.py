"""Masked structured grids, time grids and discrete L2 inner products.

Fields live on every node of a tensor grid spanning a bounding box and are
stored flattened (C order).  Nodes outside the domain mask carry the
homogeneous Dirichlet value 0.  Controls and trajectories are plain numpy
arrays of shape ``(nt, size)`` and ``(nt + 1, size)`` respectively.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping, Sequence

import numpy as np
import scipy.sparse as sp


class GridError(ValueError):
    pass


@dataclass(frozen=True)
class Box:
    """Axis-aligned box; ``lo``/``hi`` may cover only the leading axes."""

    lo: tuple[float, ...]
    hi: tuple[float, ...]

    def contains(self, coords: np.ndarray, closed: bool = True) -> np.ndarray:
        k = len(self.lo)
        pts = coords[:, :k]
        lo = np.asarray(self.lo, dtype=float)
        hi = np.asarray(self.hi, dtype=float)
        if closed:
            return np.all((pts >= lo) & (pts <= hi), axis=1)
        return np.all((pts > lo) & (pts < hi), axis=1)


@dataclass(frozen=True)
class Ball:
    """Euclidean ball in the leading ``len(center)`` axes (a cylinder in 3D)."""

    center: tuple[float, ...]
    radius: float

    def contains(self, coords: np.ndarray, closed: bool = True) -> np.ndarray:
        k = len(self.center)
        r2 = np.sum((coords[:, :k] - np.asarray(self.center, dtype=float)) ** 2, axis=1)
        return r2 <= self.radius**2 if closed else r2 < self.radius**2


Shape = Box | Ball


def shape_from_dict(d: Mapping) -> Shape:
    kind = d.get("shape")
    if kind == "box":
        return Box(tuple(float(x) for x in d["lo"]), tuple(float(x) for x in d["hi"]))
    if kind == "ball":
        return Ball(tuple(float(x) for x in d["center"]), float(d["radius"]))
    raise GridError(f"unknown region shape {kind!r} (expected 'box' or 'ball')")


def _as_shapes(region) -> tuple[Shape, ...]:
    if region is None:
        return ()
    if isinstance(region, (Box, Ball)):
        return (region,)
    if isinstance(region, Mapping):
        return (shape_from_dict(region),)
    return tuple(s if isinstance(s, (Box, Ball)) else shape_from_dict(s) for s in region)


@dataclass(frozen=True)
class TimeGrid:
    T: float
    nt: int

    def __post_init__(self):
        if not self.T > 0 or self.nt < 1:
            raise GridError(f"need T > 0 and nt >= 1, got T={self.T}, nt={self.nt}")

    @property
    def dt(self) -> float:
        return self.T / self.nt

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.T, self.nt + 1)


@dataclass(frozen=True, eq=False)
class SpatialGrid:
    """Tensor grid over ``bounds`` with boolean region masks.

    Masks and weights are flat arrays of length ``size``.  Quadrature uses
    the mass-lumped rule: every interior node carries the cell volume
    ``prod(spacing)``, exterior nodes carry zero.
    """

    bounds: tuple[tuple[float, float], ...]
    shape: tuple[int, ...]
    mask: np.ndarray
    omega: np.ndarray
    o1: np.ndarray
    o2: np.ndarray
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def ndim(self) -> int:
        return len(self.shape)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    @cached_property
    def spacing(self) -> tuple[float, ...]:
        return tuple((b - a) / (n - 1) for (a, b), n in zip(self.bounds, self.shape))

    @cached_property
    def axes(self) -> list[np.ndarray]:
        return [np.linspace(a, b, n) for (a, b), n in zip(self.bounds, self.shape)]

    @cached_property
    def coords(self) -> np.ndarray:
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    @cached_property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    @cached_property
    def weights(self) -> np.ndarray:
        return np.where(self.mask, self.cell_volume, 0.0)

    @cached_property
    def interior(self) -> np.ndarray:
        return np.flatnonzero(self.mask)

    @cached_property
    def omega_index(self) -> np.ndarray:
        return np.flatnonzero(self.omega)

    @cached_property
    def laplacian(self) -> sp.csr_matrix:
        """Negative discrete Laplacian on interior nodes (5/7-point stencil)."""
        n = self.interior.size
        pos = -np.ones(self.size, dtype=np.int64)
        pos[self.interior] = np.arange(n)
        multi = np.stack(np.unravel_index(self.interior, self.shape), axis=1)
        rows, cols, vals = [], [], []
        diag = np.zeros(n)
        for ax, h in enumerate(self.spacing):
            diag += 2.0 / h**2
            for step in (-1, 1):
                nb = multi.copy()
                nb[:, ax] += step
                # interior nodes never touch the bounding box edge, so nb is in range
                flat = np.ravel_multi_index(nb.T, self.shape)
                j = pos[flat]
                keep = j >= 0
                rows.append(np.arange(n)[keep])
                cols.append(j[keep])
                vals.append(np.full(keep.sum(), -1.0 / h**2))
        rows.append(np.arange(n))
        cols.append(np.arange(n))
        vals.append(diag)
        A = sp.coo_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n)
        )
        return A.tocsr()

    def field(self, values) -> np.ndarray:
        """Broadcast ``values`` to a field and zero it outside the domain."""
        out = np.broadcast_to(np.asarray(values, dtype=float), (self.size,)).copy()
        out[~self.mask] = 0.0
        return out

    def evaluate(self, fn) -> np.ndarray:
        """Field from a callable of the coordinate columns, e.g. ``lambda x, y: x * y``."""
        return self.field(fn(*self.coords.T))

    def as_array(self, f: np.ndarray) -> np.ndarray:
        return np.asarray(f).reshape(self.shape)


def build_grid(
    bounds: Sequence[Sequence[float]],
    nodes: Sequence[int],
    omega,
    o1,
    o2,
    domain=None,
) -> SpatialGrid:
    """Build a masked grid.

    ``domain`` is an open region (shape or list of shapes, intersected);
    ``None`` means the open bounding box.  Nodes on the bounding box edge are
    always exterior.  ``omega``, ``o1`` and ``o2`` are closed regions clipped
    to the domain.
    """
    bounds = tuple((float(a), float(b)) for a, b in bounds)
    nodes = tuple(int(n) for n in nodes)
    if len(bounds) != len(nodes) or not 1 <= len(nodes) <= 3:
        raise GridError("bounds and nodes must describe 1 to 3 axes")
    if any(n < 3 for n in nodes):
        raise GridError(f"need at least 3 nodes per axis, got {nodes}")
    if any(b <= a for a, b in bounds):
        raise GridError(f"degenerate bounding box {bounds}")

    axes = [np.linspace(a, b, n) for (a, b), n in zip(bounds, nodes)]
    coords = np.stack([m.ravel() for m in np.meshgrid(*axes, indexing="ij")], axis=1)
    multi = np.stack(np.unravel_index(np.arange(coords.shape[0]), nodes), axis=1)
    mask = np.all((multi > 0) & (multi < np.asarray(nodes) - 1), axis=1)
    for s in _as_shapes(domain):
        mask &= s.contains(coords, closed=False)
    if not mask.any():
        raise GridError("domain has no interior nodes")

    def region(r, name):
        shapes = _as_shapes(r)
        if not shapes:
            raise GridError(f"region {name} is missing")
        m = mask.copy()
        for s in shapes:
            m &= s.contains(coords, closed=True)
        if not m.any():
            raise GridError(f"region {name} does not intersect the domain")
        return m

    om, m1, m2 = region(omega, "omega"), region(o1, "o1"), region(o2, "o2")
    if not (m1 & m2).any():
        raise GridError("o1 and o2 do not overlap")
    for arr in (mask, om, m1, m2):
        arr.setflags(write=False)
    return SpatialGrid(bounds, nodes, mask, om, m1, m2)


def grid_from_config(geometry: Mapping) -> SpatialGrid:
    return build_grid(
        geometry["bounds"],
        geometry["nodes"],
        omega=geometry["omega"],
        o1=geometry["o1"],
        o2=geometry["o2"],
        domain=geometry.get("domain"),
    )


def inner_product(grid: SpatialGrid, a: np.ndarray, b: np.ndarray, region: np.ndarray | None = None) -> float:
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape[-1] != grid.size or b.shape[-1] != grid.size:
        raise GridError("field does not match grid size")
    w = grid.weights if region is None else np.where(region, grid.weights, 0.0)
    return float(np.sum(w * a * b))


def norm(grid: SpatialGrid, a: np.ndarray, region: np.ndarray | None = None) -> float:
    return float(np.sqrt(max(inner_product(grid, a, a, region), 0.0)))


def spacetime_inner_product(grid: SpatialGrid, time: TimeGrid, v: np.ndarray, w: np.ndarray) -> float:
    """Control-space product ``sum_n dt (v^n, w^n)_omega`` over levels 1..nt."""
    v = np.asarray(v)
    w = np.asarray(w)
    if v.shape != (time.nt, grid.size) or w.shape != v.shape:
        raise GridError(f"controls must have shape {(time.nt, grid.size)}, got {v.shape} and {w.shape}")
    wts = np.where(grid.omega, grid.weights, 0.0)
    return float(time.dt * np.sum(wts * v * w))


def control_norm(grid: SpatialGrid, time: TimeGrid, v: np.ndarray) -> float:
    return float(np.sqrt(max(spacetime_inner_product(grid, time, v, v), 0.0)))


def zero_control(grid: SpatialGrid, time: TimeGrid) -> np.ndarray:
    return np.zeros((time.nt, grid.size))


def restrict_to_omega(grid: SpatialGrid, v: np.ndarray) -> np.ndarray:
    return np.where(grid.omega, v, 0.0)
