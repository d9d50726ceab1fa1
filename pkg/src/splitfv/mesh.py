"""Uniform 1-D finite-volume grid, cell-averaged fields, and grid norms."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np


@dataclass(frozen=True)
class Grid1D:
    """Uniform partition of [x_min, x_max] into n_cells cells."""

    x_min: float
    x_max: float
    n_cells: int

    def __post_init__(self):
        if not (np.isfinite(self.x_min) and np.isfinite(self.x_max)):
            raise ValueError("grid endpoints must be finite")
        if self.x_max <= self.x_min:
            raise ValueError(f"degenerate interval: [{self.x_min}, {self.x_max}]")
        if self.n_cells < 2:
            raise ValueError(f"n_cells must be >= 2, got {self.n_cells}")

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / self.n_cells

    @property
    def cell_centers(self) -> np.ndarray:
        return self.x_min + (np.arange(self.n_cells) + 0.5) * self.dx

    @property
    def cell_edges(self) -> np.ndarray:
        return self.x_min + np.arange(self.n_cells + 1) * self.dx


def build_grid(x_min: float, x_max: float, n_cells: int) -> Grid1D:
    """Construct a uniform grid, validating the interval and cell count."""
    return Grid1D(float(x_min), float(x_max), int(n_cells))


@dataclass(frozen=True)
class CellField:
    """Cell-averaged scalar field on a grid at a given time.

    The value array is copied on construction and marked read-only, so a
    field can be shared between step records and observers without risk
    of aliasing bugs.
    """

    grid: Grid1D
    values: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float).copy()
        if values.shape != (self.grid.n_cells,):
            raise ValueError(
                f"values shape {values.shape} does not match n_cells={self.grid.n_cells}"
            )
        if not np.all(np.isfinite(values)):
            raise ValueError("field values must be finite")
        if not np.isfinite(self.time):
            raise ValueError("field time must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def with_values(self, values: np.ndarray, time: float | None = None) -> CellField:
        """New field on the same grid with replaced values (and optionally time)."""
        return CellField(self.grid, values, self.time if time is None else time)


@dataclass(frozen=True)
class TimeAxis:
    """Time-marching parameters: horizon, step cap, and CFL safety factor."""

    t_final: float
    dt_max: float = 0.1
    cfl_number: float = 0.9

    def __post_init__(self):
        if not np.isfinite(self.t_final) or self.t_final < 0:
            raise ValueError(f"t_final must be >= 0, got {self.t_final}")
        if not np.isfinite(self.dt_max) or self.dt_max <= 0:
            raise ValueError(f"dt_max must be > 0, got {self.dt_max}")
        if not (0.0 < self.cfl_number <= 1.0):
            raise ValueError(f"cfl_number must be in (0, 1], got {self.cfl_number}")


def project_initial(u0: Callable, grid: Grid1D, quadrature_points: int = 8) -> CellField:
    """Project an initial profile onto cell averages by composite midpoint rule.

    Args:
        u0: real-valued function of position; may be vectorized over numpy
            arrays, a scalar-only callable is handled too.
        grid: target grid.
        quadrature_points: midpoint sub-samples per cell.

    Returns:
        CellField at time 0 with per-cell midpoint-rule averages.
    """
    if quadrature_points < 1:
        raise ValueError("quadrature_points must be >= 1")
    q = int(quadrature_points)
    dx = grid.dx
    left = grid.x_min + np.arange(grid.n_cells) * dx
    offsets = (np.arange(q) + 0.5) * (dx / q)
    points = left[:, None] + offsets[None, :]
    try:
        sampled = np.asarray(u0(points), dtype=float)
        if sampled.shape != points.shape:
            raise ValueError("shape mismatch")
    except (TypeError, ValueError):
        sampled = np.array(
            [[float(u0(float(p))) for p in row] for row in points], dtype=float
        )
    return CellField(grid, sampled.mean(axis=1), time=0.0)


def total_variation(field: CellField) -> float:
    """Sum of absolute jumps across interior interfaces."""
    return float(np.sum(np.abs(np.diff(field.values))))


def linf_norm(field: CellField) -> float:
    return float(np.max(np.abs(field.values)))


def l1_distance(a: CellField, b: CellField) -> float:
    """Grid-weighted l1 distance between two fields on the same grid."""
    if a.grid != b.grid:
        raise ValueError(f"grid mismatch: {a.grid} vs {b.grid}")
    return float(a.grid.dx * np.sum(np.abs(a.values - b.values)))
