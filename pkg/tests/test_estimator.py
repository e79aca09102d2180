import itertools

import numpy as np
import pytest
import scipy.optimize

from fsac.config import EstimationOptions
from fsac.exceptions import FsacInputError, InvalidComponentCount
from fsac.functional.grid import CurveSet
from fsac.models.estimator import confidence_band, fit, select_k
from fsac.models.fpls import degrees_of_freedom, fpls_fit
from fsac.models.likelihood import FsacSpec, concentrated_loglik, profile, reduced_form
from fsac.simulation.harness import generate_dgp, run_scenario
from fsac.simulation.scenarios import ScenarioConfig
from fsac.spatial.weights import lattice_weights


@pytest.fixture
def lattice_fit(small_scenario):
    draw = generate_dgp(small_scenario, rep_seed=123)
    W = lattice_weights(small_scenario.rows, small_scenario.cols)
    basis = fpls_fit(draw.X, draw.y, K=2)
    spec = FsacSpec.from_basis(draw.y, basis, W)
    return spec, fit(spec)


def _log_det(a, W):
    return np.linalg.slogdet(np.eye(W.n) - a * W.values)[1]


def test_optimum_beats_fine_grid(lattice_fit):
    """On n = 25 the refined optimum is at least as good as every node of a 41x41 grid."""
    spec, result = lattice_fit
    nodes = np.linspace(-0.95, 0.95, 41)
    values = {
        (r, l): concentrated_loglik(r, l, spec) for r, l in itertools.product(nodes, nodes)
    }
    best_node, best_value = max(values.items(), key=lambda item: item[1])

    assert result.loglik >= best_value - 1e-9
    assert abs(result.rho_hat - best_node[0]) <= 0.05
    assert abs(result.lambda_hat - best_node[1]) <= 0.05


def test_fit_outputs_are_consistent(lattice_fit):
    spec, result = lattice_fit
    options = EstimationOptions()
    assert options.lower <= result.rho_hat <= options.upper
    assert options.lower <= result.lambda_hat <= options.upper
    assert result.loglik == pytest.approx(concentrated_loglik(result.rho_hat, result.lambda_hat, spec))
    assert result.loglik >= result.optimizer.grid_loglik - 1e-9
    assert result.optimizer.n_grid_evaluations == 21 * 21
    assert result.beta_fn.shape == (spec.basis.grid.m,)
    np.testing.assert_allclose(result.beta_fn, result.beta_coefs @ spec.basis.weight_functions)


def test_bic_counts_free_parameters(lattice_fit):
    spec, result = lattice_fit
    assert result.n_params == spec.K + 3
    assert result.bic == pytest.approx(-2 * result.loglik + (spec.K + 3) * np.log(spec.n))


def test_fit_is_deterministic(lattice_fit):
    spec, result = lattice_fit
    again = fit(spec)
    assert again.to_dict() == result.to_dict()


def test_both_fixed_is_profile(sac_spec):
    result = fit(sac_spec, EstimationOptions(fix_rho=0.4, fix_lambda=0.3))
    best = profile(0.4, 0.3, sac_spec)
    assert (result.rho_hat, result.lambda_hat) == (0.4, 0.3)
    np.testing.assert_allclose(result.beta_coefs, best.beta)
    assert result.n_params == sac_spec.K + 1


def test_classical_linear_model_reduction(sac_spec):
    result = fit(sac_spec, EstimationOptions(fix_rho=0.0, fix_lambda=0.0))
    coef, *_ = np.linalg.lstsq(sac_spec.Z, sac_spec.y, rcond=None)
    np.testing.assert_allclose(result.beta_coefs, coef, atol=1e-8)


def test_spatial_lag_reduction(sac_spec):
    """lambda fixed at 0: compare with an independently coded lag-model profile."""
    W, Z, y, n = sac_spec.W, sac_spec.Z, sac_spec.y, sac_spec.n

    def lag_coef(rho):
        coef, *_ = np.linalg.lstsq(Z, y - rho * W.values @ y, rcond=None)
        return coef

    def negative_loglik(rho):
        resid = y - rho * W.values @ y - Z @ lag_coef(rho)
        return (n / 2) * np.log(resid @ resid / n) - _log_det(rho, W)

    oracle = scipy.optimize.minimize_scalar(
        negative_loglik, bounds=(-0.9999, 0.9999), method="bounded", options={"xatol": 1e-10}
    )
    result = fit(sac_spec, EstimationOptions(fix_lambda=0.0))

    assert result.lambda_hat == 0.0
    assert result.rho_hat == pytest.approx(oracle.x, abs=1e-6)
    np.testing.assert_allclose(result.beta_coefs, lag_coef(result.rho_hat), atol=1e-8)


def test_spatial_error_reduction(sac_spec):
    """rho fixed at 0: compare with an independently coded SEM profile."""
    M, Z, y, n = sac_spec.M, sac_spec.Z, sac_spec.y, sac_spec.n

    def sem_coef(lam):
        B = np.eye(n) - lam * M.values
        coef, *_ = np.linalg.lstsq(B @ Z, B @ y, rcond=None)
        return coef

    def negative_loglik(lam):
        B = np.eye(n) - lam * M.values
        resid = B @ (y - Z @ sem_coef(lam))
        return (n / 2) * np.log(resid @ resid / n) - _log_det(lam, M)

    oracle = scipy.optimize.minimize_scalar(
        negative_loglik, bounds=(-0.9999, 0.9999), method="bounded", options={"xatol": 1e-10}
    )
    result = fit(sac_spec, EstimationOptions(fix_rho=0.0))

    assert result.rho_hat == 0.0
    assert result.lambda_hat == pytest.approx(oracle.x, abs=1e-6)
    np.testing.assert_allclose(result.beta_coefs, sem_coef(result.lambda_hat), atol=1e-8)


def test_lu_and_eigen_fits_agree(lattice_fit):
    spec, result = lattice_fit
    lu = fit(spec, EstimationOptions(log_det_method="lu"))
    assert lu.rho_hat == pytest.approx(result.rho_hat, abs=1e-6)
    assert lu.lambda_hat == pytest.approx(result.lambda_hat, abs=1e-6)


def test_confidence_band(lattice_fit):
    spec, result = lattice_fit
    band = confidence_band(result, alpha=0.05)
    assert band.multiplier == pytest.approx(1.959964, abs=1e-6)

    phi = spec.basis.weight_functions
    variance = np.einsum("km,kl,lm->m", phi, np.linalg.inv(result.sigma_k), phi)
    expected = 1.959964 * np.sqrt(result.sigma2_hat * variance)
    np.testing.assert_allclose(band.half_width, expected, rtol=1e-5)
    assert np.all(band.lower <= band.center) and np.all(band.center <= band.upper)

    wider = confidence_band(result, alpha=0.01)
    assert np.all(wider.half_width >= band.half_width)


def test_confidence_band_rejects_bad_alpha(lattice_fit):
    _, result = lattice_fit
    with pytest.raises(FsacInputError):
        confidence_band(result, alpha=1.0)


def test_select_k_records_bic_trace(small_scenario):
    draw = generate_dgp(small_scenario, rep_seed=9)
    W = lattice_weights(5, 5)
    result = select_k(draw.y, draw.X, W, k_max=4)

    assert len(result.bic_trace) == 4
    assert all(b is not None for b in result.bic_trace)
    assert result.bic == min(result.bic_trace)
    assert result.K == result.bic_trace.index(min(result.bic_trace)) + 1


def test_select_k_charges_effective_degrees_of_freedom(small_scenario):
    draw = generate_dgp(small_scenario, rep_seed=9)
    W = lattice_weights(5, 5)
    result = select_k(draw.y, draw.X, W, k_max=3)

    df = degrees_of_freedom(draw.X, draw.y, k_max=3)
    assert result.df_basis == pytest.approx(df[result.K - 1])
    assert result.bic == pytest.approx(-2 * result.loglik + (df[result.K - 1] + 3) * np.log(W.n))
    assert result.to_dict()["df_basis"] == result.df_basis


def test_select_k_nominal_parameter_count(small_scenario):
    draw = generate_dgp(small_scenario, rep_seed=9)
    W = lattice_weights(5, 5)
    result = select_k(draw.y, draw.X, W, k_max=3, options=EstimationOptions(bic_df="nominal"))

    assert result.df_basis is None
    assert result.bic == pytest.approx(-2 * result.loglik + (result.K + 3) * np.log(W.n))


def test_select_k_prefers_few_components():
    """A smooth coefficient on an 11x11 lattice: the scan keeps K <= 3 on most replications."""
    config = ScenarioConfig(rho=0.5, lambda_=0.5, n_reps=30, seed=2024)
    report = run_scenario(config, n_jobs=-1)
    ks = [rep.K for rep in report.per_rep]
    assert len(ks) >= 25
    assert sum(k <= 3 for k in ks) > len(ks) / 2


def test_select_k_stops_at_degenerate_component(grid, lattice_5x5, rng):
    """Rank-one curves leave nothing to extract after the first component."""
    phi = np.sqrt(2.0) * np.sin(np.pi * grid.points)
    c = rng.standard_normal(25)
    X = CurveSet(grid, np.outer(c, phi))
    y = reduced_form(c, rng.standard_normal(25), 0.3, 0.2, lattice_5x5, lattice_5x5)

    result = select_k(y, X, lattice_5x5, k_max=3)
    assert result.K == 1
    assert result.bic_trace[0] is not None
    assert result.bic_trace[1:] == [None, None]


def test_select_k_bounds(small_scenario):
    draw = generate_dgp(small_scenario, rep_seed=9)
    with pytest.raises(InvalidComponentCount):
        select_k(draw.y, draw.X, lattice_weights(5, 5), k_max=25)


def test_ml_estimator_unbiased_with_known_spatial_parameters():
    """Fixed scores and known (rho, lambda): mean and covariance of beta_hat over 2000 draws."""
    W = lattice_weights(11, 11)
    n, rho, lam = W.n, 0.3, 0.7
    rng = np.random.default_rng(77)
    Z = rng.standard_normal((n, 3))
    beta_k = np.array([1.0, -0.5, 0.25])
    signal = Z @ beta_k

    estimates = np.empty((2000, 3))
    sigma_k = None
    for j in range(2000):
        y = reduced_form(signal, rng.standard_normal(n), rho, lam, W, W)
        best = profile(rho, lam, FsacSpec(y=y, Z=Z, W=W, M=W))
        estimates[j] = best.beta
        sigma_k = best.sigma_k

    mean = estimates.mean(axis=0)
    se = estimates.std(axis=0, ddof=1) / np.sqrt(len(estimates))
    assert np.all(np.abs(mean - beta_k) <= 4 * se)

    theoretical = np.linalg.inv(sigma_k)
    empirical = np.cov(estimates, rowvar=False)
    assert np.linalg.norm(empirical - theoretical) <= 0.1 * np.linalg.norm(theoretical)
