from .estimator import ConfidenceBand, FsacFit, OptimizerTrace, bic, confidence_band, fit, select_k
from .fpls import FplsBasis, degrees_of_freedom, fpls_fit, reconstruct_beta, scores
from .likelihood import (
    FsacSpec,
    Profile,
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

__all__ = [
    "ConfidenceBand",
    "FplsBasis",
    "FsacFit",
    "FsacSpec",
    "OptimizerTrace",
    "Profile",
    "beta_hat",
    "bic",
    "concentrated_loglik",
    "degrees_of_freedom",
    "confidence_band",
    "fit",
    "fpls_fit",
    "full_loglik",
    "log_det_shift",
    "omega",
    "profile",
    "reconstruct_beta",
    "reduced_form",
    "score_beta",
    "score_sigma2",
    "scores",
    "select_k",
    "sigma2_hat",
]
