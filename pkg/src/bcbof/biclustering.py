"""Orthogonal-factor biclustering (BCBOF).

Pipeline: correlation matrix -> principal-component loadings -> varimax
rotation -> hierarchical clustering of the rotated loading rows (grouping
the original columns) -> per column group, DBSCAN over the rows restricted
to that group's columns -> every dense row cluster paired with its column
group becomes a candidate bicluster, kept when its mean squared residual
is at most ``delta``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, BiclusterMixin

from . import factor
from ._validation import as_float_matrix
from .clustering import dbscan, hierarchical_cluster
from .metrics import msr


@dataclass(frozen=True)
class Bicluster:
    """A (row set, column set) block of a source matrix and its residual score."""

    row_indices: tuple[int, ...]
    col_indices: tuple[int, ...]
    msr: float

    def __post_init__(self):
        rows = tuple(int(i) for i in self.row_indices)
        cols = tuple(int(j) for j in self.col_indices)
        for name, idx in (("row_indices", rows), ("col_indices", cols)):
            if not idx:
                raise ValueError(f"{name} must be non-empty")
            if list(idx) != sorted(set(idx)):
                raise ValueError(f"{name} must be sorted and duplicate-free")
            if idx[0] < 0:
                raise ValueError(f"{name} contains a negative index")
        if self.msr < 0:
            raise ValueError(f"msr must be >= 0, got {self.msr}")
        object.__setattr__(self, "row_indices", rows)
        object.__setattr__(self, "col_indices", cols)

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.row_indices), len(self.col_indices)

    def cells(self) -> set[tuple[int, int]]:
        return {(r, c) for r in self.row_indices for c in self.col_indices}

    def to_dict(self, col_labels=None) -> dict:
        d = {"rows": list(self.row_indices), "cols": list(self.col_indices),
             "msr": self.msr}
        if col_labels is not None:
            d["col_labels"] = [col_labels[j] for j in self.col_indices]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Bicluster":
        return cls(tuple(d["rows"]), tuple(d["cols"]), float(d["msr"]))


@dataclass(frozen=True)
class BcbofConfig:
    """Tuning knobs for :func:`bcbof`.

    ``eps`` / ``min_pts`` may be left None to use the built-in heuristics
    (half the median pairwise row distance; max(4, 2% of rows)).
    ``column_num_clusters`` / ``column_distance_threshold`` control the
    column-grouping stop; with neither set, one group per retained factor.
    """

    delta: float = 0.05
    eps: float | None = None
    min_pts: int | None = None
    factor_criterion: str = "kaiser"
    linkage: str = "average"
    column_num_clusters: int | None = None
    column_distance_threshold: float | None = None
    normalize_loadings: bool = False
    varimax_tol: float = 1e-6
    varimax_max_iter: int = 100
    kaiser_normalize: bool = True

    def __post_init__(self):
        if self.delta < 0:
            raise ValueError(f"delta must be >= 0, got {self.delta}")
        if self.eps is not None and not self.eps > 0:
            raise ValueError(f"eps must be > 0, got {self.eps}")
        if self.min_pts is not None and self.min_pts < 1:
            raise ValueError(f"min_pts must be >= 1, got {self.min_pts}")
        if (self.column_num_clusters is not None
                and self.column_distance_threshold is not None):
            raise ValueError("set at most one column-grouping stop rule")


def default_eps(points: np.ndarray) -> float:
    """Heuristic DBSCAN radius: half the median pairwise Euclidean distance."""
    n = points.shape[0]
    if n < 2:
        return 1e-12
    sq = np.sum(points**2, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (points @ points.T)
    np.maximum(d2, 0.0, out=d2)
    upper = np.sqrt(d2[np.triu_indices(n, k=1)])
    return max(0.5 * float(np.median(upper)), 1e-12)


def default_min_pts(n_rows: int) -> int:
    """Heuristic DBSCAN density: max(4, 2% of the row count)."""
    return max(4, math.ceil(0.02 * n_rows))


@dataclass(frozen=True)
class BcbofResult:
    """Biclusters plus the intermediate artifacts that produced them."""

    biclusters: list[Bicluster]
    factor_model: "factor.FactorModel"
    column_groups: object  # ClusterAssignment over the original columns


def bcbof_full(x, config: BcbofConfig | None = None) -> BcbofResult:
    """Run the pipeline and keep the factor model and column grouping.

    Parameters
    ----------
    x : DataMatrix or array-like of shape (n, p)
        Input matrix, expected to be scaled to [0, 1] column-wise (a
        warning is emitted otherwise). Needs at least 2 rows and 2 columns.
    config : BcbofConfig, optional
    """
    cfg = config or BcbofConfig()
    values = as_float_matrix(x)
    n, p = values.shape
    if n < 2 or p < 2:
        raise ValueError(f"matrix must be at least 2x2, got {n}x{p}")
    if values.min() < -1e-9 or values.max() > 1.0 + 1e-9:
        warnings.warn(
            "input does not look min-max normalized to [0, 1]; "
            "results are defined but the delta filter may be miscalibrated",
            stacklevel=2,
        )

    corr = factor.correlation_matrix(values)
    eigenvalues = np.sort(np.linalg.eigvalsh(corr))[::-1]
    m = factor.choose_num_factors(eigenvalues, cfg.factor_criterion)
    model = factor.extract_factors(corr, m)
    model = factor.rotate_model(model, tol=cfg.varimax_tol,
                                max_iter=cfg.varimax_max_iter,
                                kaiser_normalize=cfg.kaiser_normalize)

    loading_points = model.rotated_B
    if cfg.normalize_loadings:
        norms = np.linalg.norm(loading_points, axis=1)
        safe = np.where(norms > 0, norms, 1.0)
        loading_points = loading_points / safe[:, None]

    if cfg.column_distance_threshold is not None:
        col_groups = hierarchical_cluster(
            loading_points, cfg.linkage,
            distance_threshold=cfg.column_distance_threshold)
    else:
        k = cfg.column_num_clusters or model.num_factors
        col_groups = hierarchical_cluster(loading_points, cfg.linkage,
                                          num_clusters=min(k, p))

    found: list[Bicluster] = []
    for group in range(col_groups.num_clusters):
        cols = col_groups.members(group)
        if cols.size < 2:
            continue  # a single column cannot form a 2-column block
        restricted = values[:, cols]
        eps = cfg.eps if cfg.eps is not None else default_eps(restricted)
        min_pts = cfg.min_pts if cfg.min_pts is not None else default_min_pts(n)
        row_labels = dbscan(restricted, eps, min_pts)
        for label in range(row_labels.num_clusters):
            rows = row_labels.members(label)
            if rows.size < 2:
                continue
            score = msr(values, rows, cols)
            if score <= cfg.delta:
                found.append(Bicluster(tuple(rows), tuple(cols), score))

    found.sort(key=lambda b: (b.msr, b.row_indices, b.col_indices))
    return BcbofResult(found, model, col_groups)


def bcbof(x, config: BcbofConfig | None = None) -> list[Bicluster]:
    """Run the full orthogonal-factor biclustering pipeline.

    Returns the blocks with at least 2 rows and 2 columns whose mean
    squared residual is at most ``config.delta``, sorted by ascending
    residual. See :func:`bcbof_full` to also retrieve the factor model.
    """
    return bcbof_full(x, config).biclusters


class BCBOF(BiclusterMixin, BaseEstimator):
    """Scikit-learn style estimator around :func:`bcbof`.

    After ``fit``, ``rows_`` and ``columns_`` hold the usual boolean
    bicluster indicator arrays, ``biclusters_list_`` the underlying
    :class:`Bicluster` objects, and ``factor_model_`` the fitted
    orthogonal-factor decomposition.

    Parameters mirror :class:`BcbofConfig`.
    """

    def __init__(self, delta=0.05, eps=None, min_pts=None,
                 factor_criterion="kaiser", linkage="average",
                 column_num_clusters=None, column_distance_threshold=None,
                 normalize_loadings=False, varimax_tol=1e-6,
                 varimax_max_iter=100, kaiser_normalize=True):
        self.delta = delta
        self.eps = eps
        self.min_pts = min_pts
        self.factor_criterion = factor_criterion
        self.linkage = linkage
        self.column_num_clusters = column_num_clusters
        self.column_distance_threshold = column_distance_threshold
        self.normalize_loadings = normalize_loadings
        self.varimax_tol = varimax_tol
        self.varimax_max_iter = varimax_max_iter
        self.kaiser_normalize = kaiser_normalize

    def _config(self) -> BcbofConfig:
        return BcbofConfig(
            delta=self.delta, eps=self.eps, min_pts=self.min_pts,
            factor_criterion=self.factor_criterion, linkage=self.linkage,
            column_num_clusters=self.column_num_clusters,
            column_distance_threshold=self.column_distance_threshold,
            normalize_loadings=self.normalize_loadings,
            varimax_tol=self.varimax_tol,
            varimax_max_iter=self.varimax_max_iter,
            kaiser_normalize=self.kaiser_normalize,
        )

    def fit(self, X, y=None):
        values = as_float_matrix(X)
        n, p = values.shape
        result = bcbof_full(values, self._config())
        found = result.biclusters
        self.biclusters_list_ = found
        self.factor_model_ = result.factor_model
        self.column_groups_ = result.column_groups
        self.rows_ = np.zeros((len(found), n), dtype=bool)
        self.columns_ = np.zeros((len(found), p), dtype=bool)
        for i, bc in enumerate(found):
            self.rows_[i, list(bc.row_indices)] = True
            self.columns_[i, list(bc.col_indices)] = True
        self.n_features_in_ = p
        return self
