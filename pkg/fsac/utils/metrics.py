from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
import scipy.integrate
import scipy.stats as stats

from fsac.exceptions import ConstantInput, LengthMismatch
from fsac.functional.grid import Grid
from fsac.spatial.weights import WeightMatrix


def compute_bic(loglik: float, n_params: float, n: int) -> float:
    """-2 loglik + n_params log n."""
    return -2.0 * loglik + n_params * np.log(n)


def compute_ise(beta_est: np.ndarray, beta_true: np.ndarray, grid: Grid) -> float:
    """Integrated squared error of a coefficient function, trapezoid rule."""
    beta_est = np.asarray(beta_est, dtype=float)
    beta_true = np.asarray(beta_true, dtype=float)
    if beta_est.shape != (grid.m,) or beta_true.shape != (grid.m,):
        raise LengthMismatch(
            f"functions of length {beta_est.size} and {beta_true.size} on a grid of {grid.m} points"
        )
    return float(scipy.integrate.trapezoid((beta_est - beta_true) ** 2, grid.points))


@dataclass(frozen=True)
class MoranResult:
    statistic: float
    expected: float
    variance_norm: float
    z_score: float
    p_value: float
    variance_rand: float
    z_rand: float
    n: int

    def to_dict(self) -> dict:
        return asdict(self)


def compute_morans_i(values: np.ndarray, w: WeightMatrix) -> MoranResult:
    """Global Moran's I with moments under normality and under randomization.

    The p-value is two-sided from the normal approximation of the
    normality-based z-score.
    """
    y = np.asarray(values, dtype=float).ravel()
    n = y.size
    if n != w.n:
        raise LengthMismatch(f"{n} values for a {w.n}x{w.n} weight matrix")

    z = y - y.mean()
    z2ss = float(z @ z)
    if z2ss <= np.finfo(float).eps * max(1.0, float(y @ y)):
        raise ConstantInput("Moran's I is undefined for a constant variable")

    weights = w.values
    s0 = weights.sum()
    s1 = 0.5 * np.sum((weights + weights.T) ** 2)
    s2 = np.sum((weights.sum(axis=1) + weights.sum(axis=0)) ** 2)
    statistic = float((n / s0) * (z @ weights @ z) / z2ss)

    expected = -1.0 / (n - 1)
    s02 = s0 * s0
    variance_norm = (n * n * s1 - n * s2 + 3 * s02) / ((n - 1) * (n + 1) * s02) - expected**2

    variance_rand = float("nan")
    if n > 3:
        kurtosis = (np.sum(z**4) / n) / (z2ss / n) ** 2
        a = n * ((n * n - 3 * n + 3) * s1 - n * s2 + 3 * s02)
        b = kurtosis * ((n * n - n) * s1 - 2 * n * s2 + 6 * s02)
        variance_rand = (a - b) / ((n - 1) * (n - 2) * (n - 3) * s02) - expected**2

    z_score = (statistic - expected) / np.sqrt(variance_norm)
    z_rand = (statistic - expected) / np.sqrt(variance_rand) if variance_rand > 0 else float("nan")
    p_value = 2.0 * stats.norm.sf(abs(z_score))

    return MoranResult(
        statistic=statistic,
        expected=expected,
        variance_norm=float(variance_norm),
        z_score=float(z_score),
        p_value=float(p_value),
        variance_rand=float(variance_rand),
        z_rand=float(z_rand),
        n=n,
    )
