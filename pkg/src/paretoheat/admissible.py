"""Closed convex admissible sets and their orthogonal projections."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import SpatialGrid, TimeGrid, control_norm

MEMBERSHIP_TOL = 1e-12


@dataclass(frozen=True)
class FullSpace:
    name = "full"

    def project(self, v: np.ndarray, grid: SpatialGrid, time: TimeGrid) -> np.ndarray:
        return np.where(grid.omega, v, 0.0)

    def contains(self, v: np.ndarray, grid: SpatialGrid, time: TimeGrid) -> bool:
        return True


@dataclass(frozen=True)
class L2Ball:
    """Ball of radius ``R`` in the quadrature-weighted space-time norm."""

    R: float
    name = "l2ball"

    def __post_init__(self):
        if not self.R > 0:
            raise ValueError(f"ball radius must be positive, got {self.R}")

    def project(self, v: np.ndarray, grid: SpatialGrid, time: TimeGrid) -> np.ndarray:
        v = np.where(grid.omega, v, 0.0)
        nv = control_norm(grid, time, v)
        if nv <= self.R:
            return v
        return v * (self.R / nv)

    def contains(self, v: np.ndarray, grid: SpatialGrid, time: TimeGrid) -> bool:
        return control_norm(grid, time, v) <= self.R * (1.0 + MEMBERSHIP_TOL)


@dataclass(frozen=True)
class Box:
    """Pointwise bound ``|v| <= R``."""

    R: float
    name = "box"

    def __post_init__(self):
        if not self.R > 0:
            raise ValueError(f"box bound must be positive, got {self.R}")

    def project(self, v: np.ndarray, grid: SpatialGrid, time: TimeGrid) -> np.ndarray:
        return np.clip(np.where(grid.omega, v, 0.0), -self.R, self.R)

    def contains(self, v: np.ndarray, grid: SpatialGrid, time: TimeGrid) -> bool:
        return bool(np.max(np.abs(np.where(grid.omega, v, 0.0)), initial=0.0) <= self.R + MEMBERSHIP_TOL)


AdmissibleSet = FullSpace | L2Ball | Box


def project(U: AdmissibleSet, v: np.ndarray, grid: SpatialGrid, time: TimeGrid) -> np.ndarray:
    return U.project(v, grid, time)


def contains(U: AdmissibleSet, v: np.ndarray, grid: SpatialGrid, time: TimeGrid) -> bool:
    return U.contains(v, grid, time)


def from_config(d: dict | None) -> AdmissibleSet:
    if not d:
        return FullSpace()
    kind = d.get("kind", "full")
    if kind == "full":
        return FullSpace()
    if kind == "l2ball":
        return L2Ball(float(d["R"]))
    if kind == "box":
        return Box(float(d["R"]))
    raise ValueError(f"unknown admissible set {kind!r} (expected full, l2ball or box)")
