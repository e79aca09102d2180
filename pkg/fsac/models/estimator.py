"""Maximum likelihood fitting of the functional SAC model."""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg
import scipy.optimize
import scipy.stats as stats

from fsac.config import EstimationOptions
from fsac.exceptions import (
    DegenerateComponent,
    EstimationError,
    FsacInputError,
    InvalidComponentCount,
    OptimizerFailure,
    ScoreCollapse,
    SingularInformation,
)
from fsac.functional.grid import CurveSet, Grid
from fsac.models.fpls import degrees_of_freedom, fpls_fit, reconstruct_beta
from fsac.models.likelihood import FsacSpec, concentrated_from_sigma2, concentrated_loglik, profile
from fsac.spatial.weights import WeightMatrix
from fsac.utils.metrics import compute_bic

logger = logging.getLogger("fsac.estimator")


@dataclass(frozen=True)
class OptimizerTrace:
    grid_best: tuple[float, ...]
    grid_loglik: float
    n_grid_evaluations: int
    path: tuple[tuple[float, ...], ...] = ()
    n_iterations: int = 0
    n_evaluations: int = 0
    converged: bool = True
    message: str = ""

    @property
    def path_length(self) -> int:
        return len(self.path)

    def to_dict(self) -> dict:
        return {
            "grid_best": list(self.grid_best),
            "grid_loglik": self.grid_loglik,
            "n_grid_evaluations": self.n_grid_evaluations,
            "refinement_path_length": self.path_length,
            "n_iterations": self.n_iterations,
            "n_evaluations": self.n_evaluations,
            "converged": self.converged,
            "message": self.message,
        }


@dataclass(frozen=True, eq=False)
class FsacFit:
    rho_hat: float
    lambda_hat: float
    sigma2_hat: float
    beta_coefs: np.ndarray
    sigma_k: np.ndarray
    loglik: float
    K: int
    n: int
    bic: float
    innovations: np.ndarray
    optimizer: OptimizerTrace
    beta_fn: np.ndarray | None = None
    grid: Grid | None = None
    weight_functions: np.ndarray | None = None
    fixed_rho: bool = False
    fixed_lambda: bool = False
    bic_trace: list[float | None] | None = field(default=None)
    df_basis: float | None = None

    @property
    def n_params(self) -> float:
        """beta_K (or its effective degrees of freedom), sigma^2 and every free spatial parameter."""
        basis = self.K if self.df_basis is None else self.df_basis
        return basis + 1 + (not self.fixed_rho) + (not self.fixed_lambda)

    def to_dict(self) -> dict:
        return {
            "rho_hat": self.rho_hat,
            "lambda_hat": self.lambda_hat,
            "sigma2_hat": self.sigma2_hat,
            "K": self.K,
            "n": self.n,
            "loglik": self.loglik,
            "bic": self.bic,
            "n_params": self.n_params,
            "df_basis": self.df_basis,
            "fixed": {"rho": self.fixed_rho, "lambda": self.fixed_lambda},
            "beta_coefs": self.beta_coefs.tolist(),
            "sigma_k": self.sigma_k.tolist(),
            "grid": None if self.grid is None else self.grid.points.tolist(),
            "beta_fn": None if self.beta_fn is None else self.beta_fn.tolist(),
            "weight_functions": (
                None if self.weight_functions is None else self.weight_functions.tolist()
            ),
            "bic_trace": self.bic_trace,
            "optimizer": self.optimizer.to_dict(),
        }


@dataclass(frozen=True, eq=False)
class ConfidenceBand:
    """Pointwise normal band beta_hat(t) +/- z_{1-alpha/2} sigma_hat sqrt(Phi' Sigma_K^{-1} Phi).

    (rho, lambda) are treated as known at their estimates.
    """

    grid: Grid
    center: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    alpha: float
    multiplier: float

    @property
    def half_width(self) -> np.ndarray:
        return (self.upper - self.lower) / 2.0

    def to_dict(self) -> dict:
        return {
            "type": "pointwise",
            "alpha": self.alpha,
            "level": 1.0 - self.alpha,
            "multiplier": self.multiplier,
            "lower": self.lower.tolist(),
            "upper": self.upper.tolist(),
        }


class _Objective:
    """Negative concentrated log-likelihood over the free spatial parameters."""

    def __init__(self, spec: FsacSpec, options: EstimationOptions):
        self.spec = spec
        self.options = options
        self.free = [
            name
            for name, value in (("rho", options.fix_rho), ("lambda", options.fix_lambda))
            if value is None
        ]

    def unpack(self, x: np.ndarray) -> tuple[float, float]:
        values = iter(float(v) for v in np.atleast_1d(x))
        rho = self.options.fix_rho if self.options.fix_rho is not None else next(values)
        lam = self.options.fix_lambda if self.options.fix_lambda is not None else next(values)
        return rho, lam

    def __call__(self, x: np.ndarray) -> float:
        rho, lam = self.unpack(x)
        try:
            return -concentrated_loglik(rho, lam, self.spec, self.options.log_det_method)
        except EstimationError:
            return np.inf


def _grid_scan(objective: _Objective) -> tuple[np.ndarray, float, int]:
    options = objective.options
    nodes = np.linspace(options.lower, options.upper, options.grid_points)
    best_x, best_value, count = None, np.inf, 0
    for point in itertools.product(nodes, repeat=len(objective.free)):
        value = objective(np.array(point))
        count += 1
        if value < best_value:
            best_x, best_value = np.array(point), value

    if best_x is None:
        raise OptimizerFailure("concentrated log-likelihood is undefined on every grid node")
    return best_x, best_value, count


def _initial_simplex(x0: np.ndarray, options: EstimationOptions) -> np.ndarray:
    step = (options.upper - options.lower) / (options.grid_points - 1)
    simplex = [x0.copy()]
    for i in range(x0.size):
        vertex = x0.copy()
        vertex[i] = x0[i] + step if x0[i] + step <= options.upper else x0[i] - step
        simplex.append(vertex)
    return np.array(simplex)


def _maximize(objective: _Objective) -> tuple[float, float, OptimizerTrace]:
    options = objective.options
    if not objective.free:
        rho, lam = objective.unpack(np.empty(0))
        value = -objective(np.empty(0))
        return rho, lam, OptimizerTrace(grid_best=(), grid_loglik=value, n_grid_evaluations=1)

    x0, grid_value, n_grid = _grid_scan(objective)
    path: list[tuple[float, ...]] = []
    result = scipy.optimize.minimize(
        objective,
        x0,
        method="Nelder-Mead",
        bounds=[(options.lower, options.upper)] * x0.size,
        callback=lambda xk: path.append(tuple(float(v) for v in xk)),
        options={
            "xatol": options.xatol,
            "fatol": options.fatol,
            "maxiter": options.max_iter,
            "initial_simplex": _initial_simplex(x0, options),
        },
    )

    x_opt = np.clip(result.x, options.lower, options.upper)
    value = objective(x_opt)
    tolerance = 1e-10 * max(1.0, abs(grid_value))
    if not np.isfinite(value) or value > grid_value + tolerance:
        raise OptimizerFailure(
            f"refinement ended at {-value:.6g}, below the grid optimum {-grid_value:.6g}"
        )
    if not result.success:
        logger.warning(f"Nelder-Mead stopped without converging: {result.message}")

    rho, lam = objective.unpack(x_opt)
    trace = OptimizerTrace(
        grid_best=tuple(float(v) for v in x0),
        grid_loglik=-grid_value,
        n_grid_evaluations=n_grid,
        path=tuple(path),
        n_iterations=int(result.nit),
        n_evaluations=int(result.nfev),
        converged=bool(result.success),
        message=str(result.message),
    )
    return rho, lam, trace


def fit(spec: FsacSpec, options: EstimationOptions | None = None) -> FsacFit:
    """Maximize l_c over (rho, lambda), then plug the optimum into beta_hat and sigma2_hat.

    The search is a deterministic grid scan followed by bounded Nelder-Mead from
    the best node. ``fix_rho`` / ``fix_lambda`` pin a parameter and give the
    functional spatial lag, functional SEM or classical functional linear model.
    """
    options = options or EstimationOptions()
    if spec.K < 1:
        raise InvalidComponentCount("the model needs at least one score column")

    objective = _Objective(spec, options)
    rho, lam, trace = _maximize(objective)

    best = profile(rho, lam, spec)
    loglik = concentrated_from_sigma2(best.sigma2, rho, lam, spec, options.log_det_method)

    grid = weight_functions = beta_fn = None
    if spec.basis is not None:
        grid = spec.basis.grid
        weight_functions = spec.basis.weight_functions
        beta_fn = reconstruct_beta(best.beta, spec.basis)

    result = FsacFit(
        rho_hat=rho,
        lambda_hat=lam,
        sigma2_hat=best.sigma2,
        beta_coefs=best.beta,
        sigma_k=best.sigma_k,
        loglik=float(loglik),
        K=spec.K,
        n=spec.n,
        bic=0.0,
        innovations=best.innovations,
        optimizer=trace,
        beta_fn=beta_fn,
        grid=grid,
        weight_functions=weight_functions,
        fixed_rho=options.fix_rho is not None,
        fixed_lambda=options.fix_lambda is not None,
    )
    result = replace(result, bic=bic(spec, result))

    logger.info(
        f"K={spec.K}: rho={rho:.4f}, lambda={lam:.4f}, sigma2={best.sigma2:.4f}, "
        f"loglik={loglik:.4f}, bic={result.bic:.4f}"
    )
    return result


def bic(spec: FsacSpec, fit_result: FsacFit) -> float:
    """-2 loglik + (K + 3) log n for the unconstrained model.

    K is replaced by ``fit_result.df_basis`` when the fit carries one.
    """
    return compute_bic(fit_result.loglik, fit_result.n_params, spec.n)


def confidence_band(fit_result: FsacFit, alpha: float = 0.05) -> ConfidenceBand:
    if not 0.0 < alpha < 1.0:
        raise FsacInputError(f"alpha must lie in (0, 1), got {alpha}")
    if fit_result.weight_functions is None or fit_result.beta_fn is None or fit_result.grid is None:
        raise FsacInputError("the fit carries no basis; a band needs the weight functions")

    phi = fit_result.weight_functions
    try:
        factor = scipy.linalg.cho_factor(fit_result.sigma_k)
    except np.linalg.LinAlgError as e:
        raise SingularInformation(f"Sigma_K is not positive definite: {e}") from e

    quad = np.maximum(np.sum(phi * scipy.linalg.cho_solve(factor, phi), axis=0), 0.0)
    multiplier = float(stats.norm.ppf(1.0 - alpha / 2.0))
    half = multiplier * np.sqrt(fit_result.sigma2_hat) * np.sqrt(quad)

    return ConfidenceBand(
        grid=fit_result.grid,
        center=fit_result.beta_fn,
        lower=fit_result.beta_fn - half,
        upper=fit_result.beta_fn + half,
        alpha=alpha,
        multiplier=multiplier,
    )


def select_k(
    y: np.ndarray,
    X: CurveSet,
    W: WeightMatrix,
    M: WeightMatrix | None = None,
    k_max: int = 6,
    options: EstimationOptions | None = None,
) -> FsacFit:
    """Fit K = 1..k_max and keep the smallest BIC (ties go to the smaller K).

    With ``options.bic_df == "effective"`` the K score columns are charged their
    FPLS effective degrees of freedom instead of K. The returned fit carries the
    whole BIC sequence; entries are None where a component could not be
    extracted or the fit failed.
    """
    options = options or EstimationOptions()
    if not 1 <= k_max <= min(X.n - 1, X.grid.m):
        raise InvalidComponentCount(f"k_max={k_max} outside 1..min(n-1, m)")

    df = None
    if options.bic_df == "effective":
        df = degrees_of_freedom(X, y, k_max, center=options.center)

    trace: list[float | None] = [None] * k_max
    best: FsacFit | None = None
    last_error: EstimationError | None = None

    for K in range(1, k_max + 1):
        try:
            basis = fpls_fit(X, y, K, center=options.center)
        except (DegenerateComponent, ScoreCollapse) as e:
            logger.warning(f"Stopping the K scan at K={K}: {e}")
            last_error = e
            break

        spec = FsacSpec.from_basis(y, basis, W, M)
        try:
            candidate = fit(spec, options)
        except EstimationError as e:
            logger.warning(f"Fit with K={K} failed: {e}")
            last_error = e
            continue

        if df is not None and np.isfinite(df[K - 1]):
            candidate = replace(candidate, df_basis=float(df[K - 1]))
            candidate = replace(candidate, bic=bic(spec, candidate))

        trace[K - 1] = candidate.bic
        if best is None or candidate.bic < best.bic:
            best = candidate

    if best is None:
        raise last_error or OptimizerFailure("no K produced a fit")

    logger.info(f"BIC selected K={best.K} from {k_max} candidates")
    return replace(best, bic_trace=trace)
