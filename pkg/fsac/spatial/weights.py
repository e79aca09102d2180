"""Spatial weight matrices: contiguity graphs, row standardization, spectra."""

from __future__ import annotations

import logging
import warnings
from collections.abc import Iterable
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.linalg

from fsac.exceptions import (
    EmptyGraph,
    IndexOutOfRange,
    InvalidLattice,
    InvalidWeights,
    IsolatedUnitWarning,
)

logger = logging.getLogger("fsac.weights")

ROW_SUM_TOL = 1e-12


@dataclass(frozen=True)
class Adjacency:
    """Undirected neighbour structure over ``n`` units, 1-based unordered pairs."""

    n: int
    edges: frozenset[tuple[int, int]]

    def __init__(self, n: int, edges: Iterable[tuple[int, int]]):
        pairs = set()
        for i, j in edges:
            i, j = int(i), int(j)
            if i == j:
                raise InvalidWeights(f"self-loop on unit {i}")
            pairs.add((min(i, j), max(i, j)))
        object.__setattr__(self, "n", int(n))
        object.__setattr__(self, "edges", frozenset(pairs))

    def __len__(self) -> int:
        return len(self.edges)


@dataclass(frozen=True, eq=False)
class WeightMatrix:
    values: np.ndarray
    row_normalized: bool = False
    eigenvalues: np.ndarray | None = None

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=float)
        if values.ndim != 2 or values.shape[0] != values.shape[1]:
            raise InvalidWeights(f"weight matrix must be square, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise InvalidWeights("weight matrix has non-finite entries")
        if np.any(np.diag(values) != 0.0):
            raise InvalidWeights("weight matrix must have a zero diagonal")
        if np.any(values < 0.0):
            raise InvalidWeights("weight matrix entries must be nonnegative")
        if self.row_normalized:
            sums = values.sum(axis=1)
            connected = sums > 0.0
            if np.any(np.abs(sums[connected] - 1.0) > ROW_SUM_TOL):
                raise InvalidWeights("row-normalized matrix has rows not summing to 1")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

        if self.eigenvalues is not None:
            eigenvalues = np.array(self.eigenvalues, dtype=complex)
            eigenvalues.setflags(write=False)
            object.__setattr__(self, "eigenvalues", eigenvalues)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def row_sums(self) -> np.ndarray:
        return self.values.sum(axis=1)

    @property
    def n_isolated(self) -> int:
        return int(np.count_nonzero(self.row_sums == 0.0))

    @property
    def s0(self) -> float:
        return float(self.values.sum())

    def lag(self, v: np.ndarray) -> np.ndarray:
        return self.values @ v


def build_rook_grid(rows: int, cols: int) -> Adjacency:
    """Rook (edge-sharing) neighbours on a rows x cols lattice, numbered row-major."""
    if rows < 2 or cols < 2:
        raise InvalidLattice(f"lattice needs at least 2 rows and 2 columns, got {rows}x{cols}")

    edges = []
    for r in range(rows):
        for c in range(cols):
            unit = r * cols + c + 1
            if c + 1 < cols:
                edges.append((unit, unit + 1))
            if r + 1 < rows:
                edges.append((unit, unit + cols))

    return Adjacency(rows * cols, edges)


def build_contiguity(adjacency: Adjacency) -> WeightMatrix:
    """Binary (0/1) contiguity matrix of an adjacency."""
    n = adjacency.n
    if n < 2:
        raise InvalidWeights(f"need at least 2 spatial units, got {n}")
    if not adjacency.edges:
        raise EmptyGraph("adjacency has no edges")

    values = np.zeros((n, n))
    for i, j in adjacency.edges:
        if i < 1 or j > n:
            raise IndexOutOfRange(f"edge ({i}, {j}) outside units 1..{n}")
        values[i - 1, j - 1] = 1.0
        values[j - 1, i - 1] = 1.0

    return WeightMatrix(values, row_normalized=False)


def row_normalize(w: WeightMatrix) -> WeightMatrix:
    """Divide each row by its sum and cache the spectrum of the result.

    Rows without neighbours stay zero and trigger an ``IsolatedUnitWarning``.
    """
    sums = w.row_sums
    isolated = sums == 0.0
    if np.any(isolated):
        units = (np.flatnonzero(isolated) + 1).tolist()
        logger.warning(f"{len(units)} isolated spatial units: {units[:10]}")
        warnings.warn(
            f"{len(units)} spatial units have no neighbours", IsolatedUnitWarning, stacklevel=2
        )

    scale = np.where(isolated, 1.0, sums)
    values = w.values / scale[:, None]
    eigenvalues = np.linalg.eigvals(values)

    return WeightMatrix(values, row_normalized=True, eigenvalues=eigenvalues)


def log_det_dense(a: float, s: WeightMatrix) -> float:
    """log|det(I - aS)| from a dense LU factorization."""
    lu, _ = scipy.linalg.lu_factor(np.eye(s.n) - a * s.values)
    return float(np.sum(np.log(np.abs(np.diag(lu)))))


@lru_cache(maxsize=8)
def lattice_weights(rows: int, cols: int) -> WeightMatrix:
    """Row-standardized rook weights of a rows x cols lattice."""
    return row_normalize(build_contiguity(build_rook_grid(rows, cols)))
