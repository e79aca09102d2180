"""Readers and writers for weights, curves, responses, scenarios and JSON outputs.

Every parse error is raised as ``InputFileError`` naming the file and, where
known, the 1-based line.
"""

from __future__ import annotations

import hashlib
import json
import logging
import re
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd
import yaml
from pydantic import ValidationError

from fsac.exceptions import FsacInputError, InputFileError
from fsac.functional.grid import CurveSet, Grid
from fsac.simulation.scenarios import ScenarioConfig
from fsac.spatial.weights import (
    Adjacency,
    WeightMatrix,
    build_contiguity,
    row_normalize,
)

logger = logging.getLogger("fsac.loaders")

TEXT_ROW_SUM_TOL = 1e-8


def _require_file(path: str | Path) -> Path:
    path = Path(path)
    if not path.is_file():
        raise InputFileError(path, "no such file")
    return path


def _read_numeric_csv(path: str | Path) -> np.ndarray:
    """Headerless CSV of reals; a ragged, blank or non-numeric row is an error."""
    path = _require_file(path)
    try:
        frame = pd.read_csv(
            path, header=None, dtype=str, skip_blank_lines=False, skipinitialspace=True
        )
    except pd.errors.EmptyDataError as e:
        raise InputFileError(path, "file is empty") from e
    except pd.errors.ParserError as e:
        match = re.search(r"line (\d+)", str(e))
        raise InputFileError(
            path, "row has more fields than the first row", int(match.group(1)) if match else None
        ) from e

    numeric = frame.apply(pd.to_numeric, errors="coerce").to_numpy(dtype=float)
    bad = ~np.isfinite(numeric)
    if bad.any():
        row, col = (int(i) for i in np.argwhere(bad)[0])
        token = frame.iat[row, col]
        problem = "missing value" if pd.isna(token) else f"not a finite number: {token!r}"
        raise InputFileError(path, f"column {col + 1}: {problem}", line=row + 1)
    return numeric


def load_edge_list(path: str | Path) -> Adjacency:
    """Edge list with an ``n <count>`` header, one 1-based ``i j`` pair per line, ``#`` comments."""
    path = _require_file(path)
    n: int | None = None
    edges: list[tuple[int, int]] = []

    with open(path) as f:
        for lineno, raw in enumerate(f, start=1):
            tokens = raw.split("#", 1)[0].split()
            if not tokens:
                continue
            if tokens[0] == "n":
                if n is not None:
                    raise InputFileError(path, "duplicate 'n' header", lineno)
                if len(tokens) != 2 or not tokens[1].isdigit():
                    raise InputFileError(path, "header must read 'n <count>'", lineno)
                n = int(tokens[1])
                continue

            if n is None:
                raise InputFileError(path, "edge before the 'n <count>' header", lineno)
            if len(tokens) != 2:
                raise InputFileError(path, f"expected 'i j', got {raw.strip()!r}", lineno)
            try:
                i, j = int(tokens[0]), int(tokens[1])
            except ValueError as e:
                raise InputFileError(path, f"non-integer unit index in {raw.strip()!r}", lineno) from e
            if not (1 <= i <= n and 1 <= j <= n):
                raise InputFileError(path, f"edge ({i}, {j}) outside units 1..{n}", lineno)
            if i == j:
                raise InputFileError(path, f"self-loop on unit {i}", lineno)
            edges.append((i, j))

    if n is None:
        raise InputFileError(path, "missing 'n <count>' header")
    if n < 2:
        raise InputFileError(path, f"need at least 2 spatial units, got {n}")
    if not edges:
        raise InputFileError(path, "no edges")

    logger.debug(f"Read {len(edges)} edges over {n} units from {path}")
    return Adjacency(n, edges)


def load_dense_weights(path: str | Path, require_row_normalized: bool = False) -> WeightMatrix:
    """Dense n x n CSV weight matrix, no header.

    With ``require_row_normalized`` every row must already sum to one and the
    matrix comes back normalized with its spectrum; otherwise it is returned as read.
    """
    values = _read_numeric_csv(path)
    try:
        w = WeightMatrix(values, row_normalized=False)
    except FsacInputError as e:
        raise InputFileError(path, str(e)) from e

    if require_row_normalized:
        sums = w.row_sums
        off = np.flatnonzero((sums > 0.0) & (np.abs(sums - 1.0) > TEXT_ROW_SUM_TOL))
        if off.size:
            raise InputFileError(path, f"row sums to {sums[off[0]]:.6g}", line=int(off[0]) + 1)
        return row_normalize(w)
    return w


def load_weights(path: str | Path, require_row_normalized: bool = False) -> WeightMatrix:
    """Row-normalized weights from a dense ``.csv`` matrix or an edge list (any other extension).

    ``require_row_normalized`` rejects a dense matrix whose nonzero rows do not
    already sum to one. Edge lists carry no weights and are always normalized.
    """
    path = Path(path)
    if path.suffix.lower() == ".csv":
        raw = load_dense_weights(path, require_row_normalized=require_row_normalized)
    else:
        raw = build_contiguity(load_edge_list(path))
    w = row_normalize(raw)
    logger.info(f"Loaded {w.n}x{w.n} weights from {path} ({w.n_isolated} isolated units)")
    return w


def load_curves(path: str | Path) -> CurveSet:
    """First line is the grid, each further line one curve observed on it."""
    values = _read_numeric_csv(path)
    if values.shape[0] < 2:
        raise InputFileError(path, "need a grid line and at least one curve")
    try:
        grid = Grid(values[0])
    except FsacInputError as e:
        raise InputFileError(path, f"invalid grid: {e}", line=1) from e
    return CurveSet(grid, values[1:])


def load_response(path: str | Path) -> np.ndarray:
    """One real per line."""
    values = _read_numeric_csv(path)
    if values.shape[1] != 1:
        raise InputFileError(path, f"expected one value per line, found {values.shape[1]} columns", 1)
    return values[:, 0]


def load_scenario(path: str | Path, **overrides: Any) -> ScenarioConfig:
    """Scenario from a YAML mapping; non-None keyword overrides win over the file."""
    path = _require_file(path)
    try:
        with open(path) as f:
            data = yaml.safe_load(f) or {}
    except yaml.YAMLError as e:
        mark = getattr(e, "problem_mark", None)
        raise InputFileError(path, "invalid YAML", mark.line + 1 if mark else None) from e
    if not isinstance(data, dict):
        raise InputFileError(path, "scenario file must hold a mapping")

    data.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return ScenarioConfig.model_validate(data)
    except ValidationError as e:
        raise InputFileError(path, f"invalid scenario: {e}") from e


def file_digest(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def write_json(path: str | Path, payload: dict) -> None:
    with open(path, "w") as f:
        json.dump(payload, f, indent=2)
        f.write("\n")
