import numpy as np
import pytest

from fsac.exceptions import DegenerateVariance, InvalidWeights, LengthMismatch, SingularInformation
from fsac.models.likelihood import (
    FsacSpec,
    beta_hat,
    concentrated_loglik,
    full_loglik,
    log_det_shift,
    omega,
    profile,
    reduced_form,
    score_beta,
    score_sigma2,
    sigma2_hat,
)
from fsac.spatial.weights import build_contiguity, build_rook_grid


def test_spec_validation(lattice_5x5, rng):
    y = rng.standard_normal(25)
    with pytest.raises(LengthMismatch):
        FsacSpec(y=y, Z=rng.standard_normal((24, 2)), W=lattice_5x5, M=lattice_5x5)
    with pytest.raises(InvalidWeights):
        binary = build_contiguity(build_rook_grid(5, 5))
        FsacSpec(y=y, Z=rng.standard_normal((25, 2)), W=binary, M=lattice_5x5)

    spec = FsacSpec(y=y, Z=rng.standard_normal(25), W=lattice_5x5, M=lattice_5x5)
    assert spec.K == 1


def test_omega_at_zero_is_identity(lattice_5x5):
    np.testing.assert_array_equal(omega(0.0, lattice_5x5), np.eye(25))


def test_log_det_methods_agree(lattice_7x7):
    for a in (-0.9, -0.3, 0.0, 0.45, 0.95):
        assert log_det_shift(a, lattice_7x7, "eigen") == pytest.approx(
            log_det_shift(a, lattice_7x7, "lu"), rel=1e-8, abs=1e-12
        )


def test_ols_profile_at_origin(sac_spec):
    """At rho = lambda = 0 the profile is ordinary least squares on the scores."""
    coef, *_ = np.linalg.lstsq(sac_spec.Z, sac_spec.y, rcond=None)
    rss = float(np.sum((sac_spec.y - sac_spec.Z @ coef) ** 2))
    n = sac_spec.n

    np.testing.assert_allclose(beta_hat(0.0, 0.0, sac_spec), coef, atol=1e-10)
    assert sigma2_hat(0.0, 0.0, sac_spec) == pytest.approx(rss / n, rel=1e-12)
    expected = -n / 2 - n / 2 * np.log(2 * np.pi) - n / 2 * np.log(rss / n)
    assert concentrated_loglik(0.0, 0.0, sac_spec) == pytest.approx(expected, rel=1e-12)


def test_profile_matches_gls_formula(sac_spec):
    rho, lam = 0.25, -0.4
    Om = omega(lam, sac_spec.M)
    Ay = sac_spec.spatial_filter(rho)
    Z = sac_spec.Z
    beta = np.linalg.solve(Z.T @ Om @ Z, Z.T @ Om @ Ay)
    resid = Ay - Z @ beta

    best = profile(rho, lam, sac_spec)
    np.testing.assert_allclose(best.beta, beta, atol=1e-10)
    assert best.sigma2 == pytest.approx(resid @ Om @ resid / sac_spec.n, rel=1e-10)
    np.testing.assert_allclose(best.sigma_k, Z.T @ Om @ Z, rtol=1e-12)


def test_score_beta_matches_finite_differences(sac_spec, rng):
    beta = rng.standard_normal(sac_spec.K)
    sigma2, rho, lam = 1.3, 0.2, 0.35
    h = 1e-6
    numeric = np.empty(sac_spec.K)
    for k in range(sac_spec.K):
        step = np.zeros(sac_spec.K)
        step[k] = h
        up = full_loglik(beta + step, sigma2, rho, lam, sac_spec)
        down = full_loglik(beta - step, sigma2, rho, lam, sac_spec)
        numeric[k] = (up - down) / (2 * h)

    np.testing.assert_allclose(score_beta(beta, sigma2, rho, lam, sac_spec), numeric, rtol=1e-6)


def test_profile_zeros_the_scores(sac_spec):
    for rho, lam in [(0.0, 0.0), (0.4, 0.3), (-0.6, 0.8)]:
        best = profile(rho, lam, sac_spec)
        assert np.max(np.abs(score_beta(best.beta, best.sigma2, rho, lam, sac_spec))) < 1e-8
        assert abs(score_sigma2(best.beta, best.sigma2, rho, lam, sac_spec)) < 1e-8


def test_concentrated_equals_plugged_in_full(sac_spec, rng):
    for rho, lam in rng.uniform(-0.95, 0.95, size=(50, 2)):
        best = profile(rho, lam, sac_spec)
        plugged = full_loglik(best.beta, best.sigma2, rho, lam, sac_spec)
        assert concentrated_loglik(rho, lam, sac_spec) == pytest.approx(plugged, rel=1e-10)


def test_collinear_scores_are_singular(lattice_5x5, rng):
    z = rng.standard_normal(25)
    spec = FsacSpec(
        y=rng.standard_normal(25), Z=np.column_stack([z, 2 * z]), W=lattice_5x5, M=lattice_5x5
    )
    with pytest.raises(SingularInformation):
        profile(0.1, 0.1, spec)


def test_perfect_fit_is_degenerate(lattice_5x5, rng):
    Z = rng.standard_normal((25, 2))
    spec = FsacSpec(y=Z @ np.array([1.0, 2.0]), Z=Z, W=lattice_5x5, M=lattice_5x5)
    with pytest.raises(DegenerateVariance):
        concentrated_loglik(0.0, 0.0, spec)


def test_reduced_form_round_trip(lattice_7x7, rng):
    """y from the reduced form satisfies the structural equations."""
    n = lattice_7x7.n
    signal, eps = rng.standard_normal((2, n))
    rho, lam = 0.6, -0.3
    y = reduced_form(signal, eps, rho, lam, lattice_7x7, lattice_7x7)

    u = y - rho * lattice_7x7.lag(y) - signal
    np.testing.assert_allclose(u - lam * lattice_7x7.lag(u), eps, atol=1e-10)


def test_reduced_form_at_origin(lattice_5x5, rng):
    signal, eps = rng.standard_normal((2, 25))
    np.testing.assert_array_equal(reduced_form(signal, eps, 0.0, 0.0, lattice_5x5, lattice_5x5), signal + eps)
