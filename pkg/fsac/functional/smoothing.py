"""Least-squares B-spline smoothing of raw curves and CV choice of the basis size."""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.interpolate import BSpline

from fsac.exceptions import InvalidBasisCount, LengthMismatch, RankDeficientDesign
from fsac.functional.grid import CurveSet, Grid

logger = logging.getLogger("fsac.smoothing")

MAX_CONDITION = 1e12
CV_TIE_RTOL = 1e-8


@dataclass(frozen=True, eq=False)
class BSplineBasis:
    order: int
    n_basis: int
    knots: np.ndarray
    design: np.ndarray
    grid: Grid


@dataclass(frozen=True, eq=False)
class SplineFit:
    curves: CurveSet
    coefficients: np.ndarray
    rss: float
    hat_diagonal: np.ndarray


def bspline_design(grid: Grid, n_basis: int, order: int = 4) -> BSplineBasis:
    """Clamped uniform B-spline basis of the given order evaluated on the grid."""
    if order < 2 or n_basis < order:
        raise InvalidBasisCount(f"need order >= 2 and n_basis >= order, got {n_basis=}, {order=}")

    degree = order - 1
    interior = np.linspace(grid.lower, grid.upper, n_basis - order + 2)[1:-1]
    knots = np.concatenate(
        [np.full(order, grid.lower), interior, np.full(order, grid.upper)]
    )
    design = BSpline.design_matrix(grid.points, knots, degree).toarray()

    return BSplineBasis(order=order, n_basis=n_basis, knots=knots, design=design, grid=grid)


def _as_raw(raw: np.ndarray, grid: Grid) -> np.ndarray:
    raw = np.atleast_2d(np.asarray(raw, dtype=float))
    if raw.shape[1] != grid.m:
        raise LengthMismatch(f"raw curves have {raw.shape[1]} points, grid has {grid.m}")
    return raw


def fit_bspline(raw: np.ndarray, grid: Grid, n_basis: int, order: int = 4) -> SplineFit:
    raw = _as_raw(raw, grid)
    if n_basis > grid.m:
        raise InvalidBasisCount(f"n_basis {n_basis} exceeds the {grid.m} grid points")

    basis = bspline_design(grid, n_basis, order)
    design = basis.design
    gram = design.T @ design
    if np.linalg.matrix_rank(design) < n_basis or np.linalg.cond(gram) > MAX_CONDITION:
        raise RankDeficientDesign(f"B-spline normal equations singular for n_basis={n_basis}")

    factor = scipy.linalg.cho_factor(gram)
    coefficients = scipy.linalg.cho_solve(factor, design.T @ raw.T).T
    fitted = coefficients @ design.T
    hat_diagonal = np.sum(design * scipy.linalg.cho_solve(factor, design.T).T, axis=1)

    return SplineFit(
        curves=CurveSet(grid, fitted),
        coefficients=coefficients,
        rss=float(np.sum((raw - fitted) ** 2)),
        hat_diagonal=hat_diagonal,
    )


def smooth_curves(raw: np.ndarray, grid: Grid, n_basis: int, order: int = 4) -> CurveSet:
    """Project each raw curve on the B-spline space and evaluate it back on the grid."""
    return fit_bspline(raw, grid, n_basis, order).curves


def cv_scores(
    raw: np.ndarray, grid: Grid, candidates: Sequence[int], order: int = 4
) -> dict[int, float]:
    """Leave-one-grid-point-out CV error per candidate basis size, summed over curves.

    For a linear least-squares smoother the deleted residual at grid point j is
    r_j / (1 - h_jj), so no refitting is needed.
    """
    raw = _as_raw(raw, grid)
    scores = {}
    for n_basis in candidates:
        spline = fit_bspline(raw, grid, n_basis, order)
        leverage = 1.0 - spline.hat_diagonal
        if np.any(leverage < 1e-10):
            scores[n_basis] = float("inf")
            continue
        deleted = (raw - spline.curves.values) / leverage
        scores[n_basis] = float(np.sum(deleted**2))
    return scores


def cv_select_nbasis(
    raw: np.ndarray, grid: Grid, candidates: Sequence[int], order: int = 4
) -> int:
    """Candidate with the smallest CV error; near-ties go to the smaller basis."""
    if not candidates:
        raise InvalidBasisCount("no candidate basis sizes given")

    scores = cv_scores(raw, grid, sorted(set(candidates)), order)
    best = min(scores.values())
    scale = max(float(np.sum(_as_raw(raw, grid) ** 2)), np.finfo(float).tiny)
    chosen = min(n for n, s in scores.items() if s <= best + CV_TIE_RTOL * scale)

    logger.info(f"CV selected {chosen} B-spline basis functions from {sorted(scores)}")
    return chosen
