"""Orthogonal factor model: correlation, principal-component loadings, varimax.

Variables (matrix columns) are decomposed against a small number of
mutually orthogonal common factors. Each variable's row of loadings is its
coordinate vector in the factor basis, which is what the biclustering stage
clusters instead of the raw high-dimensional columns.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace

import numpy as np

from ._validation import as_float_matrix

_EIG_TOL = 1e-10


@dataclass(frozen=True)
class FactorModel:
    """Result of principal-component factor extraction (plus optional rotation).

    Attributes
    ----------
    eigenvalues : ndarray of shape (p,)
        All eigenvalues of the correlation matrix, descending.
    loadings_A : ndarray of shape (p, m)
        Unrotated loadings; column j is sqrt(eigenvalue_j) * eigenvector_j.
    rotated_B : ndarray of shape (p, m)
        Rotated loadings, equal to ``loadings_A @ rotation_R``. Before
        rotation this is a copy of ``loadings_A``.
    rotation_R : ndarray of shape (m, m)
        Orthogonal rotation applied to the loadings (identity before rotation).
    num_factors : int
    explained_variance_ratio : ndarray of shape (p,)
        Eigenvalue share of total variance, per component.
    residual_variances : ndarray of shape (p,)
        Per-variable variance left to the specific factor: 1 - communality.
    """

    eigenvalues: np.ndarray
    loadings_A: np.ndarray
    rotated_B: np.ndarray
    rotation_R: np.ndarray
    num_factors: int
    explained_variance_ratio: np.ndarray
    residual_variances: np.ndarray

    def communalities(self, rotated: bool = True) -> np.ndarray:
        loadings = self.rotated_B if rotated else self.loadings_A
        return np.sum(loadings**2, axis=1)

    def to_dict(self) -> dict:
        return {
            "eigenvalues": self.eigenvalues.tolist(),
            "loadings_A": self.loadings_A.tolist(),
            "rotated_B": self.rotated_B.tolist(),
            "rotation_R": self.rotation_R.tolist(),
            "num_factors": self.num_factors,
            "explained_variance_ratio": self.explained_variance_ratio.tolist(),
            "residual_variances": self.residual_variances.tolist(),
        }


def correlation_matrix(m) -> np.ndarray:
    """Pearson correlation matrix of the columns of ``m``.

    Parameters
    ----------
    m : DataMatrix or array-like of shape (n, p)
        At least two rows.

    Returns
    -------
    ndarray of shape (p, p)
        Symmetric, unit diagonal, entries in [-1, 1]. Zero-variance columns
        get 0 correlation off-diagonal and trigger a warning.
    """
    x = as_float_matrix(m)
    n, p = x.shape
    if n < 2:
        raise ValueError(f"correlation needs at least 2 rows, got {n}")
    centered = x - x.mean(axis=0)
    std = centered.std(axis=0)
    degenerate = std == 0.0
    if degenerate.any():
        warnings.warn(
            f"zero-variance column(s) {np.flatnonzero(degenerate).tolist()}: "
            "correlations with them set to 0",
            stacklevel=2,
        )
    z = np.where(degenerate, 0.0, centered / np.where(degenerate, 1.0, std))
    corr = (z.T @ z) / n
    corr = np.clip((corr + corr.T) / 2.0, -1.0, 1.0)
    np.fill_diagonal(corr, 1.0)
    return corr


def parse_factor_criterion(criterion) -> tuple[str, float | int | None]:
    """Parse a factor-count criterion spec.

    Accepts "kaiser", "cumulative:<theta>", "fixed:<m>", or an equivalent
    ("name", value) tuple. Returns a normalized (name, value) pair.
    """
    if isinstance(criterion, (tuple, list)):
        name, value = criterion
    else:
        name, _, raw = str(criterion).partition(":")
        value = raw or None
    name = name.strip().lower()
    if name == "kaiser":
        return "kaiser", None
    if name == "cumulative":
        theta = float(value)
        if not 0.0 < theta <= 1.0:
            raise ValueError(f"cumulative threshold must be in (0, 1], got {theta}")
        return "cumulative", theta
    if name == "fixed":
        return "fixed", int(value)
    raise ValueError(f"unknown factor criterion {criterion!r}")


def choose_num_factors(eigenvalues, criterion="kaiser") -> int:
    """Pick the retained factor count from a descending eigenvalue list.

    kaiser: count of eigenvalues > 1, at least 1.
    cumulative:t: smallest m whose eigenvalue share reaches t.
    fixed:m: m clamped to [1, p].
    """
    eig = np.asarray(eigenvalues, dtype=float)
    if eig.size == 0 or eig.max() <= 0:
        raise ValueError("need at least one positive eigenvalue")
    name, value = parse_factor_criterion(criterion)
    p = eig.size
    if name == "kaiser":
        return max(1, int(np.sum(eig > 1.0)))
    if name == "cumulative":
        ratios = np.cumsum(eig) / eig.sum()
        return int(np.argmax(ratios >= value - 1e-15)) + 1
    return min(max(int(value), 1), p)


def _symmetric_eig_descending(corr: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    evals, evecs = np.linalg.eigh(corr)
    order = np.argsort(evals)[::-1]
    return evals[order], evecs[:, order]


def extract_factors(corr, m: int) -> FactorModel:
    """Principal-component loading extraction from a correlation matrix.

    Column j of the loading matrix is sqrt(lambda_j) * e_j for the j-th
    largest eigenpair. Each eigenvector is sign-fixed so its
    largest-magnitude entry is positive, making results reproducible.

    If ``m`` exceeds the number of positive eigenvalues it is reduced with
    a warning.
    """
    corr = as_float_matrix(corr, "corr")
    p = corr.shape[0]
    if corr.shape[1] != p or not np.allclose(corr, corr.T, atol=1e-10):
        raise ValueError("corr must be a symmetric square matrix")
    if not 1 <= m <= p:
        raise ValueError(f"m must be in [1, {p}], got {m}")

    evals, evecs = _symmetric_eig_descending(corr)
    n_positive = int(np.sum(evals > _EIG_TOL))
    if m > n_positive:
        warnings.warn(
            f"requested {m} factors but only {n_positive} positive eigenvalues; "
            f"reducing to {n_positive}",
            stacklevel=2,
        )
        m = max(1, n_positive)

    loadings = np.empty((p, m))
    for j in range(m):
        vec = evecs[:, j]
        peak = int(np.argmax(np.abs(vec)))
        if vec[peak] < 0:
            vec = -vec
        loadings[:, j] = np.sqrt(max(evals[j], 0.0)) * vec

    communality = np.sum(loadings**2, axis=1)
    return FactorModel(
        eigenvalues=evals,
        loadings_A=loadings,
        rotated_B=loadings.copy(),
        rotation_R=np.eye(m),
        num_factors=m,
        explained_variance_ratio=evals / evals.sum(),
        residual_variances=1.0 - communality,
    )


def varimax_criterion(loadings: np.ndarray, kaiser_normalize: bool = True) -> float:
    """Sum over factors of the variance of squared (row-normalized) loadings."""
    b = np.asarray(loadings, dtype=float)
    if kaiser_normalize:
        h = np.sqrt(np.sum(b**2, axis=1))
        h[h == 0] = 1.0
        b = b / h[:, None]
    sq = b**2
    return float(np.sum(sq.var(axis=0)))


def varimax_rotate(
    A,
    tol: float = 1e-6,
    max_iter: int = 100,
    kaiser_normalize: bool = True,
) -> tuple[np.ndarray, np.ndarray]:
    """Varimax rotation by pairwise planar-rotation sweeps.

    Rows are normalized by their communality before rotating (Kaiser
    normalization) and restored afterwards, unless disabled. Sweeps stop
    when the criterion improves by less than ``tol`` or after ``max_iter``
    sweeps.

    Returns
    -------
    B : ndarray of shape (p, m)
        Rotated loadings, ``A @ R``.
    R : ndarray of shape (m, m)
        The accumulated orthogonal rotation.
    """
    A = as_float_matrix(A, "loadings")
    p, m = A.shape
    if max_iter < 1:
        raise ValueError(f"max_iter must be >= 1, got {max_iter}")
    if m == 1:
        return A.copy(), np.eye(1)

    if kaiser_normalize:
        h = np.sqrt(np.sum(A**2, axis=1))
        h[h == 0] = 1.0
    else:
        h = np.ones(p)
    work = A / h[:, None]

    rotation = np.eye(m)
    previous = _plain_criterion(work)
    for _ in range(max_iter):
        for j in range(m - 1):
            for k in range(j + 1, m):
                phi = _pair_angle(work[:, j], work[:, k])
                if phi == 0.0:
                    continue
                c, s = np.cos(phi), np.sin(phi)
                g = np.array([[c, -s], [s, c]])
                work[:, [j, k]] = work[:, [j, k]] @ g
                rotation[:, [j, k]] = rotation[:, [j, k]] @ g
        current = _plain_criterion(work)
        if current - previous < tol:
            break
        previous = current

    return A @ rotation, rotation


def _plain_criterion(b: np.ndarray) -> float:
    sq = b**2
    return float(np.sum(sq.var(axis=0)))


def _pair_angle(x: np.ndarray, y: np.ndarray) -> float:
    """Closed-form varimax angle for one column pair (Kaiser's solution)."""
    p = x.shape[0]
    u = x**2 - y**2
    v = 2.0 * x * y
    a = u.sum()
    b = v.sum()
    c = float(np.sum(u**2 - v**2))
    d = float(np.sum(2.0 * u * v))
    num = d - 2.0 * a * b / p
    den = c - (a**2 - b**2) / p
    if num == 0.0 and den == 0.0:
        return 0.0
    return float(np.arctan2(num, den) / 4.0)


def rotate_model(model: FactorModel, tol: float = 1e-6, max_iter: int = 100,
                 kaiser_normalize: bool = True) -> FactorModel:
    """Return a copy of ``model`` with varimax-rotated loadings installed."""
    B, R = varimax_rotate(model.loadings_A, tol=tol, max_iter=max_iter,
                          kaiser_normalize=kaiser_normalize)
    return replace(model, rotated_B=B, rotation_R=R)
