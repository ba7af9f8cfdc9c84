"""Bicluster quality metrics.

Variance-based measures (msr, var, mar, smsr, relevance index) work on the
raw submatrix; standardization-based measures (msa, virtual error) work on
the row-standardized submatrix. All functions accept a DataMatrix or a
plain 2-D array plus row/column index sets.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from ._validation import as_float_matrix, check_index_sets


def _submatrix(x, rows, cols) -> np.ndarray:
    arr = as_float_matrix(x)
    rows, cols = check_index_sets(arr.shape[0], arr.shape[1], rows, cols)
    return arr[np.ix_(rows, cols)]


def _residuals(block: np.ndarray) -> np.ndarray:
    row_means = block.mean(axis=1, keepdims=True)
    col_means = block.mean(axis=0, keepdims=True)
    return block - row_means - col_means + block.mean()


def msr(x, rows, cols) -> float:
    """Mean squared residual of the block against its additive row+column model.

    Zero iff the block entries are exactly a row effect plus a column
    effect; this is the score a candidate bicluster is filtered on.
    """
    r = _residuals(_submatrix(x, rows, cols))
    return float(np.mean(r**2))


def var_metric(x, rows, cols) -> float:
    """Sum of squared deviations from the block mean (not size-normalized).

    The unnormalized sum makes the value grow with block size; use
    :func:`var_per_cell` for a size-independent variant.
    """
    block = _submatrix(x, rows, cols)
    return float(np.sum((block - block.mean()) ** 2))


def var_per_cell(x, rows, cols) -> float:
    """Block variance normalized by cell count (mean squared deviation)."""
    block = _submatrix(x, rows, cols)
    return float(np.mean((block - block.mean()) ** 2))


def mar(x, rows, cols) -> float:
    """Mean absolute residual against the additive row+column model."""
    r = _residuals(_submatrix(x, rows, cols))
    return float(np.mean(np.abs(r)))


def smsr(x, rows, cols) -> float:
    """Scaled mean squared residual, zero on multiplicative (row x column) patterns.

    Each term divides by the squared row and column means, so a zero row
    mean or zero column mean makes the measure undefined; that raises with
    the offending index named rather than silently skipping terms.
    """
    arr = as_float_matrix(x)
    ridx, cidx = check_index_sets(arr.shape[0], arr.shape[1], rows, cols)
    block = arr[np.ix_(ridx, cidx)]
    row_means = block.mean(axis=1)
    col_means = block.mean(axis=0)
    if np.any(row_means == 0.0):
        bad = ridx[int(np.argmax(row_means == 0.0))]
        raise ValueError(f"smsr undefined: row {bad} has zero mean within the bicluster")
    if np.any(col_means == 0.0):
        bad = cidx[int(np.argmax(col_means == 0.0))]
        raise ValueError(f"smsr undefined: column {bad} has zero mean within the bicluster")
    outer = row_means[:, None] * col_means[None, :]
    num = (outer - block * block.mean()) ** 2
    return float(np.mean(num / outer**2))


def relevance_index(x, bicluster_or_rows, cols=None) -> tuple[np.ndarray, float]:
    """Per-column relevance of a bicluster: 1 - local variance / global variance.

    The local variance is taken over the bicluster's rows, the global one
    over all rows of the full matrix. Returns (per-column values, their
    mean). A column with zero global variance is an error.
    """
    arr = as_float_matrix(x)
    if cols is None:
        rows, cols = bicluster_or_rows.row_indices, bicluster_or_rows.col_indices
    else:
        rows = bicluster_or_rows
    ridx, cidx = check_index_sets(arr.shape[0], arr.shape[1], rows, cols)
    global_var = arr[:, cidx].var(axis=0)
    if np.any(global_var == 0.0):
        bad = cidx[int(np.argmax(global_var == 0.0))]
        raise ValueError(f"relevance index undefined: column {bad} has zero global variance")
    local_var = arr[np.ix_(ridx, cidx)].var(axis=0)
    per_column = 1.0 - local_var / global_var
    return per_column, float(per_column.mean())


def standardize_bicluster(x, rows, cols, ddof: int = 0) -> np.ndarray:
    """Z-score each row of the block (population sigma by default).

    Raises if any selected row is constant across the selected columns;
    the error names the original row index.
    """
    arr = as_float_matrix(x)
    ridx, cidx = check_index_sets(arr.shape[0], arr.shape[1], rows, cols)
    block = arr[np.ix_(ridx, cidx)]
    mu = block.mean(axis=1, keepdims=True)
    sigma = block.std(axis=1, ddof=ddof, keepdims=True)
    flat = sigma.ravel() == 0.0
    if np.any(flat):
        bad = ridx[int(np.argmax(flat))]
        raise ValueError(f"cannot standardize: row {bad} is constant within the bicluster")
    return (block - mu) / sigma


def msa(standardized: np.ndarray) -> float:
    """Summed trapezoid area spanned by adjacent column ranges of a standardized block.

    Blocks with fewer than two columns have no adjacent pair and score 0.
    """
    a = as_float_matrix(standardized, "standardized block")
    if a.shape[1] < 2:
        return 0.0
    ranges = a.max(axis=0) - a.min(axis=0)
    return float(np.sum(np.abs((ranges[:-1] + ranges[1:]) / 2.0)))


def virtual_error(standardized: np.ndarray) -> float:
    """Mean absolute deviation of a standardized block from its standardized column-mean pattern.

    The column-mean vector is itself z-scored to form the virtual pattern;
    when that vector is constant its standardization is degenerate and the
    zero vector is used instead.
    """
    a = as_float_matrix(standardized, "standardized block")
    pattern = a.mean(axis=0)
    sigma = pattern.std()
    if sigma == 0.0:
        virtual = np.zeros_like(pattern)
    else:
        virtual = (pattern - pattern.mean()) / sigma
    return float(np.mean(np.abs(a - virtual[None, :])))


def overlap_stats(biclusters, shape: tuple[int, int]) -> tuple[int, float, float, float]:
    """Count, average row/column size, and cell-coverage overlap of a bicluster set.

    Overlap is (cells covered at least twice) / (cells covered at least
    once), 0 when nothing is covered.
    """
    coverage = np.zeros(shape, dtype=int)
    n_rows_total = 0
    n_cols_total = 0
    for bc in biclusters:
        rows = np.asarray(list(bc.row_indices), dtype=int)
        cols = np.asarray(list(bc.col_indices), dtype=int)
        coverage[np.ix_(rows, cols)] += 1
        n_rows_total += rows.size
        n_cols_total += cols.size
    count = len(biclusters)
    covered = int(np.sum(coverage >= 1))
    multi = int(np.sum(coverage >= 2))
    overlap = multi / covered if covered else 0.0
    avg_rows = n_rows_total / count if count else 0.0
    avg_cols = n_cols_total / count if count else 0.0
    return count, avg_rows, avg_cols, overlap


@dataclass(frozen=True)
class BiclusterMetrics:
    """Full quality readout for one bicluster."""

    n_rows: int
    n_cols: int
    msr: float
    var: float
    mar: float
    smsr: float
    per_column_ri: list[float]
    mean_ri: float
    msa: float
    ve: float

    def to_dict(self) -> dict:
        return {
            "n_rows": self.n_rows,
            "n_cols": self.n_cols,
            "msr": self.msr,
            "var": self.var,
            "mar": self.mar,
            "smsr": self.smsr,
            "per_column_ri": list(self.per_column_ri),
            "mean_ri": self.mean_ri,
            "msa": self.msa,
            "ve": self.ve,
        }


@dataclass(frozen=True)
class MetricsReport:
    """Per-bicluster metrics plus collection-level statistics."""

    per_bicluster: list[BiclusterMetrics]
    bicluster_count: int
    avg_rows: float
    avg_cols: float
    overlap: float
    runtime_seconds: float = 0.0
    means: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "schema_version": 1,
            "bicluster_count": self.bicluster_count,
            "avg_rows": self.avg_rows,
            "avg_cols": self.avg_cols,
            "overlap": self.overlap,
            "runtime_seconds": self.runtime_seconds,
            "means": dict(self.means),
            "per_bicluster": [m.to_dict() for m in self.per_bicluster],
        }

    def to_json(self, **kwargs) -> str:
        kwargs.setdefault("sort_keys", True)
        kwargs.setdefault("indent", 2)
        return json.dumps(self.to_dict(), **kwargs)

    CSV_FIELDS = ("bicluster", "n_rows", "n_cols", "msr", "var", "mar", "smsr",
                  "mean_ri", "msa", "ve")

    def to_csv_rows(self) -> list[list]:
        rows = [list(self.CSV_FIELDS)]
        for i, m in enumerate(self.per_bicluster):
            rows.append([i, m.n_rows, m.n_cols, repr(m.msr), repr(m.var), repr(m.mar),
                         repr(m.smsr), repr(m.mean_ri), repr(m.msa), repr(m.ve)])
        if self.per_bicluster:
            rows.append(["mean", "", ""] +
                        [repr(self.means[k]) for k in ("msr", "var", "mar", "smsr",
                                                       "mean_ri", "msa", "ve")])
        return rows


def evaluate_bicluster(x, bicluster) -> BiclusterMetrics:
    """Compute every quality metric for one bicluster on its source matrix."""
    rows, cols = bicluster.row_indices, bicluster.col_indices
    standardized = standardize_bicluster(x, rows, cols)
    per_ri, mean_ri = relevance_index(x, rows, cols)
    return BiclusterMetrics(
        n_rows=len(rows),
        n_cols=len(cols),
        msr=msr(x, rows, cols),
        var=var_metric(x, rows, cols),
        mar=mar(x, rows, cols),
        smsr=smsr(x, rows, cols),
        per_column_ri=per_ri.tolist(),
        mean_ri=mean_ri,
        msa=msa(standardized),
        ve=virtual_error(standardized),
    )


def evaluate_biclusters(x, biclusters, runtime_seconds: float = 0.0) -> MetricsReport:
    """Evaluate a bicluster collection and aggregate size/overlap statistics."""
    arr = as_float_matrix(x)
    per = [evaluate_bicluster(arr, bc) for bc in biclusters]
    count, avg_rows, avg_cols, overlap = overlap_stats(biclusters, arr.shape)
    means = {}
    if per:
        for key in ("msr", "var", "mar", "smsr", "mean_ri", "msa", "ve"):
            means[key] = float(np.mean([getattr(m, key) for m in per]))
    return MetricsReport(
        per_bicluster=per,
        bicluster_count=count,
        avg_rows=avg_rows,
        avg_cols=avg_cols,
        overlap=overlap,
        runtime_seconds=runtime_seconds,
        means=means,
    )
