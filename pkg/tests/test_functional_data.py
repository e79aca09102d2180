import numpy as np
import pytest

from fsac.exceptions import FsacInputError, GridMismatch, InvalidBasisCount, LengthMismatch
from fsac.functional.grid import CurveSet, Grid, inner_product, l2_norm, simulate_brownian
from fsac.functional.smoothing import (
    bspline_design,
    cv_scores,
    cv_select_nbasis,
    fit_bspline,
    smooth_curves,
)


def test_grid_validation():
    with pytest.raises(FsacInputError):
        Grid(np.array([0.0, 1.0]))
    with pytest.raises(FsacInputError):
        Grid(np.array([0.0, 0.5, 0.5, 1.0]))


def test_trapezoid_weights_sum_to_length(grid):
    assert grid.trapezoid_weights.sum() == pytest.approx(1.0, abs=1e-14)
    assert grid.trapezoid_weights[0] == pytest.approx(0.005)


def test_inner_product_known_integrals(grid):
    t = grid.points
    irregular = Grid(np.array([0.0, 0.1, 0.35, 0.8, 1.0]))
    assert inner_product(np.ones(5), np.ones(5), irregular) == pytest.approx(1.0, abs=1e-14)
    assert inner_product(t, np.ones_like(t), grid) == pytest.approx(0.5, abs=1e-14)
    assert inner_product(np.sin(np.pi * t), np.sin(np.pi * t), grid) == pytest.approx(0.5, abs=1e-4)


def test_inner_product_symmetric_and_bilinear(grid, rng):
    f, g, h = rng.standard_normal((3, grid.m))
    assert inner_product(f, g, grid) == pytest.approx(inner_product(g, f, grid), abs=1e-12)
    lhs = inner_product(2.0 * f - 3.0 * h, g, grid)
    rhs = 2.0 * inner_product(f, g, grid) - 3.0 * inner_product(h, g, grid)
    assert lhs == pytest.approx(rhs, abs=1e-12)


def test_inner_product_length_mismatch(grid):
    with pytest.raises(LengthMismatch):
        inner_product(np.ones(grid.m), np.ones(grid.m - 1), grid)


def test_l2_norm_of_constant(grid):
    assert l2_norm(np.full(grid.m, 3.0), grid) == pytest.approx(3.0)


def test_curve_set_checks(grid):
    with pytest.raises(LengthMismatch):
        CurveSet(grid, np.zeros((2, grid.m + 1)))
    with pytest.raises(FsacInputError):
        CurveSet(grid, np.full((2, grid.m), np.nan))
    curves = CurveSet(grid, np.zeros((2, grid.m)))
    with pytest.raises(GridMismatch):
        curves.require_grid(Grid.equispaced(51))


def test_cubic_bernstein_basis():
    design = bspline_design(Grid.equispaced(101), n_basis=4, order=4).design
    np.testing.assert_allclose(design[0], [1.0, 0.0, 0.0, 0.0], atol=1e-14)
    np.testing.assert_allclose(design[-1], [0.0, 0.0, 0.0, 1.0], atol=1e-14)


@pytest.mark.parametrize("n_basis,order", [(4, 4), (7, 4), (12, 3), (5, 2)])
def test_partition_of_unity(grid, n_basis, order):
    design = bspline_design(grid, n_basis, order).design
    assert design.shape == (grid.m, n_basis)
    np.testing.assert_allclose(design.sum(axis=1), 1.0, atol=1e-10)
    assert design.min() >= 0.0 and design.max() <= 1.0 + 1e-12


def test_invalid_basis_count(grid):
    with pytest.raises(InvalidBasisCount):
        bspline_design(grid, n_basis=3, order=4)
    with pytest.raises(InvalidBasisCount):
        smooth_curves(np.zeros((1, 5)), Grid.equispaced(5), n_basis=7)


def test_smoothing_reproduces_spline_space(grid, rng):
    design = bspline_design(grid, 7).design
    raw = rng.standard_normal((3, 7)) @ design.T
    np.testing.assert_allclose(smooth_curves(raw, grid, 7).values, raw, atol=1e-8)


def test_smoothing_keeps_constants(grid):
    raw = np.full((2, grid.m), 2.5)
    np.testing.assert_allclose(smooth_curves(raw, grid, 7).values, 2.5, atol=1e-10)


def test_smoothing_is_idempotent(grid, rng):
    raw = rng.standard_normal((4, grid.m))
    once = smooth_curves(raw, grid, 9).values
    np.testing.assert_allclose(smooth_curves(once, grid, 9).values, once, atol=1e-8)


def test_larger_basis_fits_better(grid, rng):
    raw = np.sin(2 * np.pi * grid.points) + 0.1 * rng.standard_normal((1, grid.m))
    assert fit_bspline(raw, grid, 7).rss < fit_bspline(raw, grid, 4).rss


def test_cv_scores_match_brute_force(grid, rng):
    """Leverage-corrected residuals equal explicit leave-one-point-out refits."""
    raw = np.sin(2 * np.pi * grid.points) + 0.2 * rng.standard_normal(grid.m)
    design = bspline_design(grid, 6).design

    brute = 0.0
    for j in range(grid.m):
        keep = np.arange(grid.m) != j
        coef, *_ = np.linalg.lstsq(design[keep], raw[keep], rcond=None)
        brute += (raw[j] - design[j] @ coef) ** 2

    assert cv_scores(raw, grid, [6])[6] == pytest.approx(brute, rel=1e-8)


def test_cv_picks_true_spline_dimension(grid, rng):
    design = bspline_design(grid, 5).design
    raw = rng.standard_normal((4, 5)) @ design.T
    assert cv_select_nbasis(raw, grid, list(range(4, 11))) == 5


def test_cv_single_candidate(grid, rng):
    assert cv_select_nbasis(rng.standard_normal((2, grid.m)), grid, [7]) == 7


def test_cv_penalizes_overfitting_noise(grid, rng):
    raw = rng.standard_normal((20, grid.m))
    assert cv_select_nbasis(raw, grid, [4, 20]) == 4


def test_brownian_starts_at_zero_and_is_deterministic(grid):
    a = simulate_brownian(10, grid, seed=3)
    b = simulate_brownian(10, grid, seed=3)
    np.testing.assert_array_equal(a.values[:, 0], 0.0)
    np.testing.assert_array_equal(a.values, b.values)


def test_brownian_variance_at_one(grid):
    curves = simulate_brownian(2000, grid, seed=11)
    assert 0.88 <= curves.values[:, -1].var(ddof=1) <= 1.12


def test_brownian_increments_are_centered(grid):
    n = 500
    increments = np.diff(simulate_brownian(n, grid, seed=5).values, axis=1)
    sd = np.sqrt(grid.points[1])
    assert abs(increments.mean()) < 4 * sd / np.sqrt(n * (grid.m - 1))
