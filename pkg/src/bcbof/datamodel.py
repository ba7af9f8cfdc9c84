"""Labeled matrix container, CSV ingestion, and column-wise min-max scaling.

The :class:`DataMatrix` is the carrier used across the library for raw data,
technical-indicator matrices, and factor loadings. Scaling maps every column
to [0, 1] using that column's observed extremes; the fitted extremes can be
re-applied to unseen data (values outside the training range are clamped).
"""

from __future__ import annotations

import csv
import re
import warnings
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from ._validation import as_float_matrix

_SLASH_DATE = re.compile(r"^(\d{4})/(\d{1,2})/(\d{1,2})$")


def _normalize_label(label: str) -> str:
    """Normalize YYYY/MM/DD labels to ISO YYYY-MM-DD; leave others untouched."""
    m = _SLASH_DATE.match(label)
    if m:
        y, mo, d = m.groups()
        return f"{y}-{int(mo):02d}-{int(d):02d}"
    return label


@dataclass(frozen=True)
class DataMatrix:
    """Dense labeled numeric matrix.

    Attributes
    ----------
    row_labels : list of str
        One label per row (dates, sample ids, ...), no duplicates.
    col_labels : list of str
        One label per column (indicator names, ...), no duplicates.
    values : ndarray of shape (n_rows, n_cols)
        Finite float64 entries. The array is made read-only on construction.
    """

    row_labels: list[str]
    col_labels: list[str]
    values: np.ndarray

    def __post_init__(self):
        arr = as_float_matrix(self.values, "values")
        if arr.shape != (len(self.row_labels), len(self.col_labels)):
            raise ValueError(
                f"values shape {arr.shape} does not match labels "
                f"({len(self.row_labels)} rows, {len(self.col_labels)} cols)"
            )
        for axis, labels in (("row", self.row_labels), ("column", self.col_labels)):
            if len(set(labels)) != len(labels):
                seen = set()
                dup = next(l for l in labels if l in seen or seen.add(l))
                raise ValueError(f"duplicate {axis} label: {dup!r}")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def n_cols(self) -> int:
        return self.values.shape[1]

    def column(self, j: int) -> np.ndarray:
        return self.values[:, j]

    def select(self, rows=None, cols=None) -> "DataMatrix":
        """Submatrix with the given row/column index lists (None = all)."""
        rows = list(range(self.n_rows)) if rows is None else list(rows)
        cols = list(range(self.n_cols)) if cols is None else list(cols)
        return DataMatrix(
            [self.row_labels[i] for i in rows],
            [self.col_labels[j] for j in cols],
            self.values[np.ix_(rows, cols)],
        )


@dataclass(frozen=True)
class NormalizationParams:
    """Per-column extremes learned by :func:`minmax_normalize`.

    ``degenerate`` flags columns whose min equals max; those columns are
    mapped to the midpoint 0.5 instead of being scaled.
    """

    col_min: np.ndarray
    col_max: np.ndarray
    degenerate: np.ndarray = field(default=None)

    def __post_init__(self):
        cmin = np.asarray(self.col_min, dtype=np.float64)
        cmax = np.asarray(self.col_max, dtype=np.float64)
        if cmin.shape != cmax.shape or cmin.ndim != 1:
            raise ValueError("col_min and col_max must be 1-D arrays of equal length")
        if np.any(cmin > cmax):
            j = int(np.argmax(cmin > cmax))
            raise ValueError(f"column {j}: min {cmin[j]} exceeds max {cmax[j]}")
        degenerate = self.degenerate
        if degenerate is None:
            degenerate = cmin == cmax
        degenerate = np.asarray(degenerate, dtype=bool)
        object.__setattr__(self, "col_min", cmin)
        object.__setattr__(self, "col_max", cmax)
        object.__setattr__(self, "degenerate", degenerate)

    @property
    def n_cols(self) -> int:
        return self.col_min.shape[0]

    def to_dict(self) -> dict:
        return {
            "col_min": self.col_min.tolist(),
            "col_max": self.col_max.tolist(),
            "degenerate": self.degenerate.astype(int).tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NormalizationParams":
        return cls(
            np.asarray(d["col_min"], dtype=float),
            np.asarray(d["col_max"], dtype=float),
            np.asarray(d["degenerate"], dtype=bool),
        )


def load_csv_matrix(path, has_header: bool = True, label_column: int | None = None) -> DataMatrix:
    """Load a numeric matrix from a comma-separated UTF-8 file.

    Parameters
    ----------
    path : str or Path
        File to read.
    has_header : bool
        When True the first row supplies column labels.
    label_column : int or None
        Index of a column holding row labels; that column is not parsed
        as data. None synthesizes labels "r0", "r1", ...

    Raises
    ------
    ValueError
        On ragged rows or a non-numeric cell; the message names the
        offending row and column (1-based, as seen in the file).
    OSError
        If the file cannot be read.
    """
    with open(path, "r", encoding="utf-8", newline="") as fh:
        raw = [row for row in csv.reader(fh) if row]
    if not raw:
        raise ValueError(f"{path}: file contains no data")

    header = raw.pop(0) if has_header else None
    if not raw:
        raise ValueError(f"{path}: no data rows after header")

    width = len(raw[0])
    row_labels: list[str] = []
    data: list[list[float]] = []
    for r, row in enumerate(raw):
        file_row = r + (2 if has_header else 1)
        if len(row) != width:
            raise ValueError(
                f"{path}: ragged row {file_row} has {len(row)} cells, expected {width}"
            )
        values = []
        for c, cell in enumerate(row):
            if label_column is not None and c == label_column:
                row_labels.append(_normalize_label(cell.strip()))
                continue
            try:
                values.append(float(cell))
            except ValueError:
                raise ValueError(
                    f"{path}: non-numeric cell at row {file_row}, column {c + 1}: {cell!r}"
                ) from None
        data.append(values)

    if label_column is None:
        row_labels = [f"r{i}" for i in range(len(data))]
    if header is not None:
        col_labels = [
            h.strip() for c, h in enumerate(header) if label_column is None or c != label_column
        ]
        if len(col_labels) != len(data[0]):
            raise ValueError(
                f"{path}: header has {len(col_labels)} data columns, rows have {len(data[0])}"
            )
    else:
        col_labels = [f"c{j}" for j in range(len(data[0]))]
    return DataMatrix(row_labels, col_labels, np.asarray(data, dtype=np.float64))


def minmax_normalize(m: DataMatrix) -> tuple[DataMatrix, NormalizationParams]:
    """Scale each column to [0, 1] by its own min/max.

    Constant columns cannot be scaled; they are mapped to 0.5, flagged in
    the returned params, and reported through a warning.
    """
    if m.n_rows == 0 or m.n_cols == 0:
        raise ValueError("cannot normalize an empty matrix")
    cmin = m.values.min(axis=0)
    cmax = m.values.max(axis=0)
    degenerate = cmin == cmax
    if degenerate.any():
        cols = [m.col_labels[j] for j in np.flatnonzero(degenerate)]
        warnings.warn(f"constant column(s) mapped to 0.5: {cols}", stacklevel=2)
    params = NormalizationParams(cmin, cmax, degenerate)
    return apply_normalization(m, params), params


def apply_normalization(m: DataMatrix, params: NormalizationParams) -> DataMatrix:
    """Scale ``m`` with previously fitted extremes, clamping results to [0, 1].

    Using stored extremes (rather than recomputing them on ``m``) keeps
    out-of-sample transforms free of look-ahead; values beyond the fitted
    range are clamped to the nearest endpoint.
    """
    if m.n_cols != params.n_cols:
        raise ValueError(
            f"matrix has {m.n_cols} columns but params were fitted on {params.n_cols}"
        )
    span = params.col_max - params.col_min
    safe_span = np.where(params.degenerate, 1.0, span)
    scaled = (m.values - params.col_min) / safe_span
    scaled = np.clip(scaled, 0.0, 1.0)
    scaled[:, params.degenerate] = 0.5
    return DataMatrix(list(m.row_labels), list(m.col_labels), scaled)


def denormalize(m: DataMatrix, params: NormalizationParams) -> DataMatrix:
    """Invert :func:`apply_normalization` (degenerate columns map to their min)."""
    if m.n_cols != params.n_cols:
        raise ValueError(
            f"matrix has {m.n_cols} columns but params were fitted on {params.n_cols}"
        )
    span = np.where(params.degenerate, 0.0, params.col_max - params.col_min)
    restored = params.col_min + m.values * span
    return DataMatrix(list(m.row_labels), list(m.col_labels), restored)


class MinMaxNormalizer(BaseEstimator, TransformerMixin):
    """Sklearn-style transformer over the library's clamped min-max scaling.

    Unlike ``sklearn.preprocessing.MinMaxScaler`` this transformer clamps
    out-of-range values at transform time and maps constant training
    columns to the 0.5 midpoint.
    """

    def fit(self, X, y=None):
        arr = as_float_matrix(X)
        m = DataMatrix([f"r{i}" for i in range(arr.shape[0])],
                       [f"c{j}" for j in range(arr.shape[1])], arr)
        _, params = minmax_normalize(m)
        self.params_ = params
        self.n_features_in_ = arr.shape[1]
        return self

    def transform(self, X):
        arr = as_float_matrix(X)
        m = DataMatrix([f"r{i}" for i in range(arr.shape[0])],
                       [f"c{j}" for j in range(arr.shape[1])], arr)
        return apply_normalization(m, self.params_).values

    def inverse_transform(self, X):
        arr = as_float_matrix(X)
        m = DataMatrix([f"r{i}" for i in range(arr.shape[0])],
                       [f"c{j}" for j in range(arr.shape[1])], arr)
        return denormalize(m, self.params_).values
