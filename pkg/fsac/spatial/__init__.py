from .weights import (
    Adjacency,
    WeightMatrix,
    build_contiguity,
    build_rook_grid,
    lattice_weights,
    log_det_dense,
    row_normalize,
)

__all__ = [
    "Adjacency",
    "WeightMatrix",
    "build_contiguity",
    "build_rook_grid",
    "lattice_weights",
    "log_det_dense",
    "row_normalize",
]
