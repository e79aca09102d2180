"""Curves discretized on a shared grid, trapezoid quadrature, Brownian covariates."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.integrate

from fsac.exceptions import FsacInputError, GridMismatch, LengthMismatch


@dataclass(frozen=True, eq=False)
class Grid:
    points: np.ndarray

    def __post_init__(self) -> None:
        points = np.array(self.points, dtype=float)
        if points.ndim != 1 or points.size < 3:
            raise FsacInputError(f"grid needs at least 3 points, got {points.size}")
        if not np.all(np.isfinite(points)) or np.any(np.diff(points) <= 0.0):
            raise FsacInputError("grid points must be finite and strictly increasing")
        points.setflags(write=False)
        object.__setattr__(self, "points", points)

    @classmethod
    def equispaced(cls, m: int, lower: float = 0.0, upper: float = 1.0) -> Grid:
        return cls(np.linspace(lower, upper, m))

    @property
    def m(self) -> int:
        return self.points.size

    @property
    def lower(self) -> float:
        return float(self.points[0])

    @property
    def upper(self) -> float:
        return float(self.points[-1])

    @cached_property
    def trapezoid_weights(self) -> np.ndarray:
        """Weights q with q @ f equal to the composite trapezoid integral of f."""
        dt = np.diff(self.points)
        q = np.zeros(self.m)
        q[:-1] += dt / 2.0
        q[1:] += dt / 2.0
        q.setflags(write=False)
        return q

    def same_as(self, other: Grid) -> bool:
        return self.m == other.m and bool(np.array_equal(self.points, other.points))


@dataclass(frozen=True, eq=False)
class CurveSet:
    """n curves evaluated on one grid; row i is X_i(t)."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=float)
        if values.ndim != 2 or values.shape[1] != self.grid.m:
            raise LengthMismatch(
                f"curve matrix of shape {values.shape} does not match a grid of {self.grid.m} points"
            )
        if not np.all(np.isfinite(values)):
            raise FsacInputError("curves contain non-finite values")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def integrate_against(self, f: np.ndarray) -> np.ndarray:
        """Vector of trapezoid integrals of X_i(t) f(t), one per curve."""
        f = np.asarray(f, dtype=float)
        if f.shape != (self.grid.m,):
            raise LengthMismatch(f"function of length {f.size} on a grid of {self.grid.m} points")
        return self.values @ (self.grid.trapezoid_weights * f)

    def require_grid(self, grid: Grid) -> None:
        if not self.grid.same_as(grid):
            raise GridMismatch("curves are not observed on the expected grid")


def inner_product(f: np.ndarray, g: np.ndarray, grid: Grid) -> float:
    """Composite trapezoid approximation of the integral of f(t) g(t) over the grid."""
    f = np.asarray(f, dtype=float)
    g = np.asarray(g, dtype=float)
    if f.shape != (grid.m,) or g.shape != (grid.m,):
        raise LengthMismatch(
            f"functions of length {f.size} and {g.size} on a grid of {grid.m} points"
        )
    return float(scipy.integrate.trapezoid(f * g, grid.points))


def l2_norm(f: np.ndarray, grid: Grid) -> float:
    return float(np.sqrt(inner_product(f, f, grid)))


def simulate_brownian(n: int, grid: Grid, seed: int) -> CurveSet:
    """Standard Brownian paths observed on the grid.

    X(t_1) is zero when the grid starts at 0, otherwise N(0, t_1).
    """
    if grid.lower < 0.0:
        raise FsacInputError(f"Brownian motion needs a grid on [0, inf), got lower {grid.lower}")

    rng = np.random.default_rng(seed)
    if grid.lower > 0.0:
        start = rng.standard_normal(n) * np.sqrt(grid.lower)
    else:
        start = np.zeros(n)
    increments = rng.standard_normal((n, grid.m - 1)) * np.sqrt(np.diff(grid.points))

    values = np.empty((n, grid.m))
    values[:, 0] = start
    values[:, 1:] = start[:, None] + np.cumsum(increments, axis=1)
    return CurveSet(grid, values)
