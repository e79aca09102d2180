from .loaders import (
    file_digest,
    load_curves,
    load_dense_weights,
    load_edge_list,
    load_response,
    load_scenario,
    load_weights,
    write_json,
)

__all__ = [
    "file_digest",
    "load_curves",
    "load_dense_weights",
    "load_edge_list",
    "load_response",
    "load_scenario",
    "load_weights",
    "write_json",
]
