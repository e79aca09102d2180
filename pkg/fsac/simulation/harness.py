"""Monte Carlo runner: draw from the reduced form, fit, aggregate.

Replication j uses the j-th child of ``np.random.SeedSequence(seed).spawn(n_reps)``.
Each child spawns one stream for the curves and one for the innovations, so a
replication depends only on (seed, j) and serial and parallel runs agree.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from tqdm import tqdm

from fsac.exceptions import EstimationError, LengthMismatch
from fsac.functional.grid import CurveSet, Grid, simulate_brownian
from fsac.models.estimator import FsacFit, fit, select_k
from fsac.models.fpls import fpls_fit
from fsac.models.likelihood import FsacSpec, reduced_form
from fsac.simulation.scenarios import ScenarioConfig, reference_result
from fsac.spatial.weights import lattice_weights
from fsac.utils.metrics import compute_ise

logger = logging.getLogger("fsac.simulation")

FIXED_X_STREAM = 0x5EED


def _seed_of(sequence: np.random.SeedSequence) -> int:
    return int(sequence.generate_state(1, dtype=np.uint64)[0])


def replication_seeds(seed: int, n_reps: int) -> list[int]:
    return [_seed_of(child) for child in np.random.SeedSequence(seed).spawn(n_reps)]


def fixed_curves_seed(seed: int) -> int:
    """Seed of the single curve sample shared by every replication in fixed-X mode."""
    return _seed_of(np.random.SeedSequence([seed, FIXED_X_STREAM]))


@dataclass(frozen=True, eq=False)
class DgpDraw:
    y: np.ndarray
    X: CurveSet
    eps: np.ndarray
    signal: np.ndarray


def generate_dgp(config: ScenarioConfig, rep_seed: int, curves: CurveSet | None = None) -> DgpDraw:
    """One sample y = A^{-1} int X beta + A^{-1} B^{-1} eps with M = W.

    ``curves`` replaces the Brownian draw (fixed-X designs); the innovation
    stream is the same either way.
    """
    grid = config.grid
    W = lattice_weights(config.rows, config.cols)
    x_stream, eps_stream = np.random.SeedSequence(rep_seed).spawn(2)

    if curves is None:
        curves = simulate_brownian(config.n, grid, _seed_of(x_stream))
    curves.require_grid(grid)
    if curves.n != config.n:
        raise LengthMismatch(f"{curves.n} curves for a lattice of {config.n} units")

    eps = config.sigma * np.random.default_rng(eps_stream).standard_normal(config.n)
    signal = curves.integrate_against(config.beta_curve())
    y = reduced_form(signal, eps, config.rho, config.lambda_, W, W)
    return DgpDraw(y=y, X=curves, eps=eps, signal=signal)


@dataclass(frozen=True, eq=False)
class Replication:
    index: int
    seed: int
    rho_hat: float | None = None
    lambda_hat: float | None = None
    sigma2_hat: float | None = None
    ise: float | None = None
    K: int | None = None
    beta_fn: np.ndarray | None = None
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None

    def to_row(self) -> dict:
        return {
            "rep": self.index,
            "seed": self.seed,
            "rho_hat": self.rho_hat,
            "lambda_hat": self.lambda_hat,
            "sigma2_hat": self.sigma2_hat,
            "ise": self.ise,
            "K": self.K,
            "error": self.error,
        }


def _fit_draw(config: ScenarioConfig, draw: DgpDraw) -> FsacFit:
    W = lattice_weights(config.rows, config.cols)
    options = config.estimation
    if config.k is None:
        return select_k(draw.y, draw.X, W, W, k_max=config.k_max, options=options)
    basis = fpls_fit(draw.X, draw.y, config.k, center=options.center)
    return fit(FsacSpec.from_basis(draw.y, basis, W, W), options)


def run_replication(
    config: ScenarioConfig, index: int, rep_seed: int, curves: CurveSet | None = None
) -> Replication:
    draw = generate_dgp(config, rep_seed, curves)
    try:
        result = _fit_draw(config, draw)
    except EstimationError as e:
        logger.warning(f"Replication {index} failed: {type(e).__name__}: {e}")
        return Replication(index=index, seed=rep_seed, error=f"{type(e).__name__}: {e}")

    return Replication(
        index=index,
        seed=rep_seed,
        rho_hat=result.rho_hat,
        lambda_hat=result.lambda_hat,
        sigma2_hat=result.sigma2_hat,
        ise=compute_ise(result.beta_fn, config.beta_curve(), config.grid),
        K=result.K,
        beta_fn=result.beta_fn,
    )


@dataclass(frozen=True, eq=False)
class SimulationReport:
    config: ScenarioConfig
    replications: list[Replication]

    @property
    def grid(self) -> Grid:
        return self.config.grid

    @property
    def per_rep(self) -> list[Replication]:
        return [r for r in self.replications if r.ok]

    @property
    def failures(self) -> list[Replication]:
        return [r for r in self.replications if not r.ok]

    def _mean(self, name: str) -> float | None:
        values = [getattr(r, name) for r in self.per_rep]
        return float(np.mean(values)) if values else None

    @property
    def means(self) -> dict[str, float | None]:
        return {name: self._mean(name) for name in ("rho_hat", "lambda_hat", "sigma2_hat")}

    @property
    def mise(self) -> float | None:
        return self._mean("ise")

    @property
    def ise_standard_error(self) -> float | None:
        ise = np.array([r.ise for r in self.per_rep])
        if ise.size < 2:
            return None
        return float(ise.std(ddof=1) / np.sqrt(ise.size))

    @property
    def beta_median(self) -> np.ndarray | None:
        """Pointwise median of the estimated coefficient curves."""
        curves = [r.beta_fn for r in self.per_rep]
        return np.median(np.vstack(curves), axis=0) if curves else None

    def summary_line(self) -> str:
        means = self.means
        if self.mise is None:
            return (
                f"rho={self.config.rho:.2f} lambda={self.config.lambda_:.2f} | "
                f"all {len(self.failures)} replications failed"
            )
        line = (
            f"rho={self.config.rho:.2f} lambda={self.config.lambda_:.2f} | "
            f"rho_hat={means['rho_hat']:.2f} lambda_hat={means['lambda_hat']:.2f} "
            f"sigma2_hat={means['sigma2_hat']:.2f} MISE={self.mise:.2f} | "
            f"reps={len(self.per_rep)} failures={len(self.failures)}"
        )
        reference = reference_result(self.config.rho, self.config.lambda_)
        if reference is not None:
            line += (
                f" | reference rho_hat={reference.rho_hat:.2f} lambda_hat={reference.lambda_hat:.2f} "
                f"sigma2_hat={reference.sigma2_hat:.2f} MISE={reference.mise:.2f}"
            )
        return line

    def to_dict(self) -> dict:
        median = self.beta_median
        return {
            "config": self.config.echo(),
            "n_reps": len(self.replications),
            "n_failures": len(self.failures),
            "means": self.means,
            "mise": self.mise,
            "ise_standard_error": self.ise_standard_error,
            "grid": self.grid.points.tolist(),
            "beta_true": self.config.beta_curve().tolist(),
            "beta_median": None if median is None else median.tolist(),
            "per_rep": [r.to_row() for r in self.replications],
        }

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([r.to_row() for r in self.replications])

    def save(self, path: str | Path) -> None:
        with open(path, "w") as f:
            json.dump(self.to_dict(), f, indent=2)

    def save_csv(self, path: str | Path) -> None:
        self.to_frame().to_csv(path, index=False)


def run_scenario(
    config: ScenarioConfig, n_jobs: int = 1, progress: bool = False
) -> SimulationReport:
    """Run all replications of a scenario; results are folded in replication order."""
    seeds = replication_seeds(config.seed, config.n_reps)
    curves = None
    if config.fixed_x:
        curves = simulate_brownian(config.n, config.grid, fixed_curves_seed(config.seed))

    logger.info(
        f"Running {config.n_reps} replications at rho={config.rho}, lambda={config.lambda_} "
        f"on a {config.rows}x{config.cols} lattice with {n_jobs} worker(s)"
    )
    if n_jobs == 1:
        results = (run_replication(config, i, s, curves) for i, s in enumerate(seeds))
    else:
        results = Parallel(n_jobs=n_jobs, return_as="generator")(
            delayed(run_replication)(config, i, s, curves) for i, s in enumerate(seeds)
        )
    # ticks once per finished replication, in replication order
    replications = list(
        tqdm(results, total=config.n_reps, desc="replications", disable=not progress, leave=False)
    )

    report = SimulationReport(config=config, replications=replications)
    if report.failures:
        logger.warning(f"{len(report.failures)} of {config.n_reps} replications failed")
    logger.info(report.summary_line())
    return report
