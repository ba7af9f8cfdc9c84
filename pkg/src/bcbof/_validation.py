"""Shared input-validation helpers."""

from __future__ import annotations

import numpy as np


def as_float_matrix(x, name: str = "X") -> np.ndarray:
    """Coerce ``x`` (array-like or DataMatrix) to a 2-D float64 ndarray.

    Raises ValueError on wrong dimensionality or non-finite entries.
    """
    values = getattr(x, "values", x)
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        bad = np.argwhere(~np.isfinite(arr))[0]
        raise ValueError(
            f"{name} contains a non-finite entry at row {bad[0]}, column {bad[1]}"
        )
    return arr


def check_index_sets(n_rows: int, n_cols: int, rows, cols):
    """Validate bicluster index sets against a matrix shape.

    Returns (rows, cols) as sorted, duplicate-free int arrays.
    """
    rows = np.asarray(list(rows), dtype=int)
    cols = np.asarray(list(cols), dtype=int)
    if rows.size == 0 or cols.size == 0:
        raise ValueError("index sets must be non-empty")
    for label, idx, bound in (("row", rows, n_rows), ("column", cols, n_cols)):
        if idx.min() < 0 or idx.max() >= bound:
            bad = idx[(idx < 0) | (idx >= bound)][0]
            raise ValueError(f"{label} index {bad} out of bounds for axis of size {bound}")
        if np.unique(idx).size != idx.size:
            raise ValueError(f"duplicate {label} indices")
    return np.sort(rows), np.sort(cols)


def check_positive(value: float, name: str):
    if not value > 0:
        raise ValueError(f"{name} must be > 0, got {value}")
    return value


def check_nonnegative(value: float, name: str):
    if value < 0:
        raise ValueError(f"{name} must be >= 0, got {value}")
    return value
