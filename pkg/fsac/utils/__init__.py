from .metrics import MoranResult, compute_bic, compute_ise, compute_morans_i

__all__ = [
    "MoranResult",
    "compute_bic",
    "compute_ise",
    "compute_morans_i",
]
