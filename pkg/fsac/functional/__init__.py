from .grid import CurveSet, Grid, inner_product, l2_norm, simulate_brownian
from .smoothing import (
    BSplineBasis,
    SplineFit,
    bspline_design,
    cv_scores,
    cv_select_nbasis,
    fit_bspline,
    smooth_curves,
)

__all__ = [
    "BSplineBasis",
    "CurveSet",
    "Grid",
    "SplineFit",
    "bspline_design",
    "cv_scores",
    "cv_select_nbasis",
    "fit_bspline",
    "inner_product",
    "l2_norm",
    "simulate_brownian",
    "smooth_curves",
]
