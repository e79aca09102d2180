"""
fsac - functional spatial autoregressive combined model

Fit the model to curve data on a spatial lattice, run Monte Carlo scenarios and
test for spatial autocorrelation.

Usage:
    fsac fit --curves curves.csv --response y.csv --weights w.txt [--m-weights m.txt]
             [--k auto|K] [--k-max 6] [--bic-df effective|nominal] [--alpha 0.05]
             [--smoothing cv|none|N] [--require-row-normalized] --out fit.json
    fsac simulate --rho R --lambda L --reps N [--rows 11] [--cols 11] [--grid-size 101]
                  [--seed S] [--fixed-x] [--k-max 6 | --k K] [--n-jobs J] --out report.json
    fsac moran --values y.csv --weights w.txt [--require-row-normalized] [--out moran.json]

Examples:
    fsac fit --curves x.csv --response y.csv --weights lattice.txt --k auto --out fit.json
    fsac simulate --rho 0.5 --lambda 0.5 --reps 500 --seed 42 --out report.json
    fsac moran --values y.csv --weights lattice.txt

Exit codes: 0 success, 2 invalid input, 3 estimation failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path
from typing import Any

import numpy as np
from pydantic import BaseModel, Field, ValidationError

from fsac import __version__
from fsac.config import EstimationOptions, SmoothingOptions, settings
from fsac.data.loaders import (
    file_digest,
    load_curves,
    load_response,
    load_scenario,
    load_weights,
    write_json,
)
from fsac.exceptions import ConstantInput, EstimationError, FsacInputError, LengthMismatch
from fsac.functional.grid import CurveSet
from fsac.functional.smoothing import cv_select_nbasis, smooth_curves
from fsac.logging_config import configure_logging
from fsac.models.estimator import FsacFit, confidence_band, fit, select_k
from fsac.models.fpls import fpls_fit
from fsac.models.likelihood import FsacSpec
from fsac.simulation.harness import run_scenario
from fsac.simulation.scenarios import ScenarioConfig
from fsac.spatial.weights import WeightMatrix
from fsac.utils.metrics import compute_morans_i

logger = logging.getLogger("fsac.cli")

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_ESTIMATION = 3


class RunManifest(BaseModel):
    """Everything needed to repeat a run: options, input digests, outputs."""

    command: str
    version: str = __version__
    options: dict[str, Any]
    inputs: dict[str, str] = Field(default_factory=dict)
    outputs: list[str] = Field(default_factory=list)
    seed: int | None = None
    elapsed_seconds: float

    def write(self, out: str | Path) -> Path:
        path = Path(f"{out}.manifest.json")
        write_json(path, self.model_dump(mode="json"))
        return path


def _options_of(args: argparse.Namespace) -> dict[str, Any]:
    return {
        key: str(value) if isinstance(value, Path) else value
        for key, value in vars(args).items()
        if key != "handler"
    }


def _component_count(value: str) -> str | int:
    if value == "auto":
        return value
    try:
        k = int(value)
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected 'auto' or a positive integer, got {value!r}") from e
    if k < 1:
        raise argparse.ArgumentTypeError(f"K must be positive, got {k}")
    return k


def _smoothing(value: str) -> str | int:
    if value in ("cv", "none"):
        return value
    try:
        n_basis = int(value)
    except ValueError as e:
        raise argparse.ArgumentTypeError(
            f"expected 'cv', 'none' or a basis size, got {value!r}"
        ) from e
    if n_basis < 4:
        raise argparse.ArgumentTypeError(f"a cubic B-spline basis needs at least 4 functions, got {n_basis}")
    return n_basis


def _alpha(value: str) -> float:
    alpha = float(value)
    if not 0.0 < alpha < 1.0:
        raise argparse.ArgumentTypeError(f"alpha must lie in (0, 1), got {alpha}")
    return alpha


def _smooth(curves: CurveSet, smoothing: str | int) -> tuple[CurveSet, int | None]:
    if smoothing == "none":
        return curves, None
    if smoothing == "cv":
        candidates = [c for c in SmoothingOptions().cv_candidates if c <= curves.grid.m]
        n_basis = cv_select_nbasis(curves.values, curves.grid, candidates)
    else:
        n_basis = int(smoothing)
    return smooth_curves(curves.values, curves.grid, n_basis), n_basis


def _moran_or_none(values: np.ndarray, w: WeightMatrix, label: str) -> dict | None:
    try:
        return compute_morans_i(values, w).to_dict()
    except ConstantInput:
        logger.warning(f"Moran's I skipped: {label} is constant")
        return None


def cmd_fit(args: argparse.Namespace) -> int:
    started = time.perf_counter()
    raw = load_curves(args.curves)
    y = load_response(args.response)
    W = load_weights(args.weights, require_row_normalized=args.require_row_normalized)
    M = (
        load_weights(args.m_weights, require_row_normalized=args.require_row_normalized)
        if args.m_weights
        else W
    )
    if y.size != raw.n:
        raise LengthMismatch(f"{args.response} has {y.size} values, {args.curves} has {raw.n} curves")
    if W.n != y.size:
        raise LengthMismatch(f"{args.weights} describes {W.n} units, the response has {y.size}")

    curves, n_basis = _smooth(raw, args.smoothing)
    options = EstimationOptions(
        center=args.center, log_det_method=args.log_det, bic_df=args.bic_df
    )

    result: FsacFit
    if args.k == "auto":
        result = select_k(y, curves, W, M, k_max=args.k_max, options=options)
    else:
        basis = fpls_fit(curves, y, args.k, center=args.center)
        result = fit(FsacSpec.from_basis(y, basis, W, M), options)

    band = confidence_band(result, args.alpha)
    payload = result.to_dict()
    payload["band"] = band.to_dict()
    payload["smoothing"] = {"method": str(args.smoothing), "n_basis": n_basis}
    payload["moran"] = {
        "response": _moran_or_none(y, W, "response"),
        "residuals": _moran_or_none(result.innovations, W, "residuals"),
    }
    write_json(args.out, payload)

    outputs = [str(args.out)]
    if args.basis_out:
        fpls_fit(curves, y, result.K, center=args.center).save(args.basis_out)
        outputs += [str(args.basis_out), str(Path(args.basis_out).with_suffix(".json"))]

    inputs = {str(p): file_digest(p) for p in (args.curves, args.response, args.weights, args.m_weights) if p}
    RunManifest(
        command="fit",
        options=_options_of(args),
        inputs=inputs,
        outputs=outputs,
        elapsed_seconds=time.perf_counter() - started,
    ).write(args.out)

    print(
        f"K={result.K} rho_hat={result.rho_hat:.4f} lambda_hat={result.lambda_hat:.4f} "
        f"sigma2_hat={result.sigma2_hat:.4f} loglik={result.loglik:.4f} bic={result.bic:.4f}"
    )
    return EXIT_OK


def _scenario_from(args: argparse.Namespace) -> ScenarioConfig:
    overrides = {
        "rho": args.rho,
        "lambda": args.lambda_,
        "n_reps": args.reps,
        "seed": args.seed,
        "rows": args.rows,
        "cols": args.cols,
        "grid_size": args.grid_size,
        "k": args.k,
        "k_max": args.k_max,
        "fixed_x": True if args.fixed_x else None,
    }
    if args.config:
        return load_scenario(args.config, **overrides)
    return ScenarioConfig.model_validate({k: v for k, v in overrides.items() if v is not None})


def cmd_simulate(args: argparse.Namespace) -> int:
    started = time.perf_counter()
    config = _scenario_from(args)
    n_jobs = args.n_jobs if args.n_jobs is not None else settings.N_JOBS

    report = run_scenario(config, n_jobs=n_jobs, progress=settings.PROGRESS)
    report.save(args.out)
    outputs = [str(args.out)]
    if args.csv:
        report.save_csv(args.csv)
        outputs.append(str(args.csv))

    RunManifest(
        command="simulate",
        options={**_options_of(args), "scenario": config.echo(), "n_jobs": n_jobs},
        inputs={str(args.config): file_digest(args.config)} if args.config else {},
        outputs=outputs,
        seed=config.seed,
        elapsed_seconds=time.perf_counter() - started,
    ).write(args.out)

    print(report.summary_line())
    return EXIT_OK


def cmd_moran(args: argparse.Namespace) -> int:
    started = time.perf_counter()
    values = load_response(args.values)
    W = load_weights(args.weights, require_row_normalized=args.require_row_normalized)
    result = compute_morans_i(values, W)

    print(
        f"I={result.statistic:.6f} E[I]={result.expected:.6f} "
        f"z={result.z_score:.4f} p={result.p_value:.4g}"
    )
    if args.out:
        write_json(args.out, result.to_dict())
        RunManifest(
            command="moran",
            options=_options_of(args),
            inputs={str(p): file_digest(p) for p in (args.values, args.weights)},
            outputs=[str(args.out)],
            elapsed_seconds=time.perf_counter() - started,
        ).write(args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fsac", description="Functional spatial autoregressive combined model"
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument(
        "--log-level", default=None, help=f"Logging level (default: {settings.LOG_LEVEL})"
    )
    parser.add_argument(
        "--log-json", action="store_true", help="Emit log records as JSON objects on stderr"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_fit = sub.add_parser("fit", help="Fit the model to curves, a response and spatial weights")
    p_fit.add_argument("--curves", type=Path, required=True, help="Curves CSV, first line is the grid")
    p_fit.add_argument("--response", type=Path, required=True, help="Response CSV, one value per line")
    p_fit.add_argument("--weights", type=Path, required=True, help="W as an edge list or dense .csv")
    p_fit.add_argument("--m-weights", type=Path, default=None, help="M for the disturbance (default: W)")
    p_fit.add_argument("--k", type=_component_count, default="auto", help="Number of FPLS components or 'auto' for BIC")
    p_fit.add_argument("--k-max", type=int, default=6, help="Largest K scanned by --k auto (default: 6)")
    p_fit.add_argument("--alpha", type=_alpha, default=0.05, help="Band level is 1 - alpha (default: 0.05)")
    p_fit.add_argument("--smoothing", type=_smoothing, default="cv", help="'cv', 'none' or a B-spline basis size")
    p_fit.add_argument("--center", action="store_true", help="Center curves and response before FPLS")
    p_fit.add_argument("--log-det", choices=["eigen", "lu"], default="eigen", help="Log-determinant method")
    p_fit.add_argument(
        "--bic-df",
        choices=["effective", "nominal"],
        default="effective",
        help="Parameter count of the score columns in the K scan (default: effective)",
    )
    p_fit.add_argument(
        "--require-row-normalized",
        action="store_true",
        help="Reject dense .csv weights whose rows do not already sum to one",
    )
    p_fit.add_argument("--basis-out", type=Path, default=None, help="Write the weight functions to this CSV")
    p_fit.add_argument("--out", type=Path, required=True, help="Fit JSON output path")
    p_fit.set_defaults(handler=cmd_fit)

    p_sim = sub.add_parser("simulate", help="Run a Monte Carlo scenario on a rook lattice")
    p_sim.add_argument("--config", type=Path, default=None, help="YAML scenario; flags override it")
    p_sim.add_argument("--rho", type=float, default=None, help="True spatial lag coefficient")
    p_sim.add_argument("--lambda", dest="lambda_", type=float, default=None, help="True disturbance coefficient")
    p_sim.add_argument("--reps", type=int, default=None, help="Number of replications (default: 200)")
    p_sim.add_argument("--rows", type=int, default=None, help="Lattice rows (default: 11)")
    p_sim.add_argument("--cols", type=int, default=None, help="Lattice columns (default: 11)")
    p_sim.add_argument("--grid-size", type=int, default=None, help="Points on [0, 1] (default: 101)")
    p_sim.add_argument("--seed", type=int, default=None, help="Root seed (default: 0)")
    p_sim.add_argument("--fixed-x", action="store_true", help="Draw the curves once for all replications")
    k_group = p_sim.add_mutually_exclusive_group()
    k_group.add_argument("--k-max", type=int, default=None, help="Largest K scanned by BIC (default: 6)")
    k_group.add_argument("--k", type=int, default=None, help="Fixed number of FPLS components")
    p_sim.add_argument("--n-jobs", type=int, default=None, help="Parallel workers (default: FSAC_N_JOBS)")
    p_sim.add_argument("--csv", type=Path, default=None, help="Also write per-replication rows as CSV")
    p_sim.add_argument("--out", type=Path, required=True, help="Report JSON output path")
    p_sim.set_defaults(handler=cmd_simulate)

    p_moran = sub.add_parser("moran", help="Moran's I test of spatial autocorrelation")
    p_moran.add_argument("--values", type=Path, required=True, help="Values CSV, one per line")
    p_moran.add_argument("--weights", type=Path, required=True, help="W as an edge list or dense .csv")
    p_moran.add_argument("--out", type=Path, default=None, help="Optional JSON output path")
    p_moran.add_argument(
        "--require-row-normalized",
        action="store_true",
        help="Reject dense .csv weights whose rows do not already sum to one",
    )
    p_moran.set_defaults(handler=cmd_moran)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.log_level or settings.LOG_LEVEL, args.log_json or settings.LOG_JSON)

    try:
        return args.handler(args)
    except (FsacInputError, ValidationError) as e:
        logger.error(f"Invalid input: {e}")
        print(f"fsac: error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except EstimationError as e:
        logger.error(f"Estimation failed: {type(e).__name__}: {e}")
        print(f"fsac: estimation failed: {e}", file=sys.stderr)
        return EXIT_ESTIMATION
    except KeyboardInterrupt:
        logger.info("Interrupted by user")
        return 130


if __name__ == "__main__":
    sys.exit(main())
