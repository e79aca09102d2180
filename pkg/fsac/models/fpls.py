"""Functional partial least squares basis built by iterative deflation."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
import pandas as pd

from fsac.exceptions import (
    DegenerateComponent,
    FsacInputError,
    InvalidComponentCount,
    LengthMismatch,
    ScoreCollapse,
)
from fsac.functional.grid import CurveSet, Grid

logger = logging.getLogger("fsac.fpls")

NORM_FLOOR = 1e-12


@dataclass(frozen=True, eq=False)
class FplsBasis:
    """Weight functions phi_k (rows, unit L2 norm), training scores Z_K and the
    per-step deflation slopes a_k(t), b_k needed to score new curves.
    """

    grid: Grid
    weight_functions: np.ndarray
    scores: np.ndarray
    x_loadings: np.ndarray
    y_loadings: np.ndarray
    center: bool = False
    x_mean: np.ndarray | None = None
    y_mean: float = 0.0

    @property
    def K(self) -> int:
        return self.weight_functions.shape[0]

    def truncate(self, K: int) -> FplsBasis:
        """First K components; identical to a fresh K-component fit."""
        if not 1 <= K <= self.K:
            raise InvalidComponentCount(f"cannot truncate a {self.K}-component basis to {K}")
        return replace(
            self,
            weight_functions=self.weight_functions[:K],
            scores=self.scores[:, :K],
            x_loadings=self.x_loadings[:K],
            y_loadings=self.y_loadings[:K],
        )

    def metadata(self) -> dict:
        return {
            "K": self.K,
            "grid_lower": self.grid.lower,
            "grid_upper": self.grid.upper,
            "grid_size": self.grid.m,
            "center": self.center,
            "sign_convention": "positive inner product with the empirical cross-covariance",
            "y_loadings": self.y_loadings.tolist(),
        }

    def save(self, path: str | Path) -> None:
        """Write weight functions as CSV (one row per phi_k) plus a JSON sidecar."""
        path = Path(path)
        frame = pd.DataFrame(self.weight_functions, columns=[f"{t:.12g}" for t in self.grid.points])
        frame.index = [f"phi_{k + 1}" for k in range(self.K)]
        frame.to_csv(path, index_label="component")
        with open(path.with_suffix(".json"), "w") as f:
            json.dump(self.metadata(), f, indent=2)


def _check_inputs(X: CurveSet, y: np.ndarray, K: int) -> np.ndarray:
    y = np.asarray(y, dtype=float).ravel()
    if y.size != X.n:
        raise LengthMismatch(f"response has {y.size} values for {X.n} curves")
    if not np.all(np.isfinite(y)):
        raise FsacInputError("response contains non-finite values")
    if not 1 <= K <= min(X.n - 1, X.grid.m):
        raise InvalidComponentCount(f"K={K} outside 1..min(n-1, m)={min(X.n - 1, X.grid.m)}")
    return y


def fpls_fit(X: CurveSet, y: np.ndarray, K: int, center: bool = False) -> FplsBasis:
    """Run K steps of the FPLS iteration on curves X and response y.

    Each step takes the empirical cross-covariance (1/n) sum_i y_i X_i(t) of the
    current residuals, normalizes it to unit L2 norm, projects the curves on it
    to get the scores z, and deflates X and y by their least-squares regressions
    on z. Centering is off unless requested.
    """
    y = _check_inputs(X, y, K)
    grid = X.grid
    q = grid.trapezoid_weights
    n = X.n

    x_k = X.values.copy()
    y_k = y.copy()
    x_mean = None
    y_mean = 0.0
    if center:
        x_mean = x_k.mean(axis=0)
        y_mean = float(y_k.mean())
        x_k -= x_mean
        y_k -= y_mean

    weights = np.empty((K, grid.m))
    scores = np.empty((n, K))
    x_loadings = np.empty((K, grid.m))
    y_loadings = np.empty(K)

    for k in range(K):
        cross_cov = (y_k @ x_k) / n
        norm = float(np.sqrt(q @ cross_cov**2))
        if norm < NORM_FLOOR:
            raise DegenerateComponent(step=k + 1, norm=norm)
        phi = cross_cov / norm

        z = x_k @ (q * phi)
        zz = float(z @ z)
        if zz < NORM_FLOOR:
            raise ScoreCollapse(step=k + 1, sum_sq=zz)

        a = (z @ x_k) / zz
        b = float(y_k @ z) / zz
        x_k = x_k - np.outer(z, a)
        y_k = y_k - b * z

        weights[k] = phi
        scores[:, k] = z
        x_loadings[k] = a
        y_loadings[k] = b
        logger.debug(f"FPLS step {k + 1}: |cov|={norm:.4g}, sum z^2={zz:.4g}, b={b:.4g}")

    return FplsBasis(
        grid=grid,
        weight_functions=weights,
        scores=scores,
        x_loadings=x_loadings,
        y_loadings=y_loadings,
        center=center,
        x_mean=x_mean,
        y_mean=y_mean,
    )


def _fitted_path(gram: np.ndarray, y: np.ndarray, k_max: int, center: bool) -> np.ndarray:
    """Fitted responses of the 1..k_max component fits, one row per K.

    Scores of step k span (I - P) G r with G = X Q X' and r the deflated response,
    so the recursion needs only the Gram matrix. Rows past a collapsed score are NaN.
    """
    offset = float(y.mean()) if center else 0.0
    r = y - offset
    total = np.full(y.size, offset)
    fitted = np.full((k_max, y.size), np.nan)
    previous: list[np.ndarray] = []

    for k in range(k_max):
        z = gram @ r
        for p in previous:
            z -= (p @ z) / (p @ p) * p
        zz = float(z @ z)
        if zz < NORM_FLOOR:
            break
        b = float(r @ z) / zz
        r = r - b * z
        total = total + b * z
        fitted[k] = total
        previous.append(z)
    return fitted


def degrees_of_freedom(
    X: CurveSet, y: np.ndarray, k_max: int, center: bool = False, step: float = 1e-6
) -> np.ndarray:
    """Effective degrees of freedom trace(d yhat_K / d y) of the K-component fits, K = 1..k_max.

    The scores are built from y, so on curves with a slowly decaying spectrum
    each component costs more than one parameter. The trace is taken by forward
    differences of the fitted path; entries past a collapsed component are NaN.
    """
    y = _check_inputs(X, y, k_max)
    x = X.values - X.values.mean(axis=0) if center else X.values
    gram = (x * X.grid.trapezoid_weights) @ x.T

    base = _fitted_path(gram, y, k_max, center)
    scale = float(np.sqrt(y @ y / y.size))
    h = step * (scale if scale > 0.0 else 1.0)

    df = np.zeros(k_max)
    for i in range(y.size):
        bumped = y.copy()
        bumped[i] += h
        df += (_fitted_path(gram, bumped, k_max, center)[:, i] - base[:, i]) / h

    logger.debug(f"FPLS effective degrees of freedom: {np.round(df, 3).tolist()}")
    return df


def scores(X: CurveSet, basis: FplsBasis) -> np.ndarray:
    """Score matrix of (possibly new) curves by the training deflate-then-project recursion."""
    X.require_grid(basis.grid)
    q = basis.grid.trapezoid_weights

    x_k = X.values.copy()
    if basis.center and basis.x_mean is not None:
        x_k -= basis.x_mean

    out = np.empty((X.n, basis.K))
    for k in range(basis.K):
        z = x_k @ (q * basis.weight_functions[k])
        x_k = x_k - np.outer(z, basis.x_loadings[k])
        out[:, k] = z
    return out


def reconstruct_beta(coefs: np.ndarray, basis: FplsBasis) -> np.ndarray:
    """beta(t) = sum_k coefs_k phi_k(t) on the basis grid."""
    coefs = np.asarray(coefs, dtype=float).ravel()
    if coefs.size != basis.K:
        raise LengthMismatch(f"{coefs.size} coefficients for a {basis.K}-component basis")
    return coefs @ basis.weight_functions
