"""Agglomerative hierarchical clustering and DBSCAN on Euclidean distance.

Both engines are deliberately small and deterministic: inputs here are tens
of columns or hundreds of rows, so brute-force distance matrices beat any
spatial index, and fixed tie-breaking rules make every run reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._validation import as_float_matrix, check_positive

LINKAGES = ("single", "complete", "average", "ward")

NOISE = -1


@dataclass(frozen=True)
class ClusterAssignment:
    """Flat clustering: ``labels[i]`` in 0..num_clusters-1 for every point."""

    labels: np.ndarray
    num_clusters: int

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=int)
        object.__setattr__(self, "labels", labels)
        if self.num_clusters < 1:
            raise ValueError("num_clusters must be >= 1")
        present = np.unique(labels)
        if not np.array_equal(present, np.arange(self.num_clusters)):
            raise ValueError("labels must cover the contiguous range 0..num_clusters-1")

    def members(self, label: int) -> np.ndarray:
        return np.flatnonzero(self.labels == label)


@dataclass(frozen=True)
class DbscanLabels:
    """DBSCAN labels: cluster ids 0..k-1 in discovery order, -1 for noise."""

    labels: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "labels", np.asarray(self.labels, dtype=int))

    @property
    def num_clusters(self) -> int:
        positive = self.labels[self.labels >= 0]
        return int(positive.max()) + 1 if positive.size else 0

    def members(self, label: int) -> np.ndarray:
        return np.flatnonzero(self.labels == label)


def _pairwise_distances(points: np.ndarray) -> np.ndarray:
    sq = np.sum(points**2, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (points @ points.T)
    np.maximum(d2, 0.0, out=d2)
    return np.sqrt(d2)


def _cluster_distance(points, a: list[int], b: list[int], linkage: str,
                      dist: np.ndarray) -> float:
    block = dist[np.ix_(a, b)]
    if linkage == "single":
        return float(block.min())
    if linkage == "complete":
        return float(block.max())
    if linkage == "average":
        return float(block.mean())
    # ward: rooted increase in within-cluster sum of squares
    ca = points[a].mean(axis=0)
    cb = points[b].mean(axis=0)
    na, nb = len(a), len(b)
    return float(np.sqrt(2.0 * na * nb / (na + nb)) * np.linalg.norm(ca - cb))


def hierarchical_cluster(
    points,
    linkage: str = "average",
    num_clusters: int | None = None,
    distance_threshold: float | None = None,
) -> ClusterAssignment:
    """Bottom-up agglomerative clustering on Euclidean distance.

    Exactly one stopping rule must be given: merge down to ``num_clusters``
    clusters, or stop as soon as the next merge distance would exceed
    ``distance_threshold``.

    Ties between candidate merges are broken by the lexicographically
    smallest pair of cluster ids, where a cluster's id is its smallest
    member index. Output labels number the final clusters by ascending
    smallest member.
    """
    points = as_float_matrix(points, "points")
    n = points.shape[0]
    if n == 0:
        raise ValueError("cannot cluster an empty point set")
    if linkage not in LINKAGES:
        raise ValueError(f"linkage must be one of {LINKAGES}, got {linkage!r}")
    if (num_clusters is None) == (distance_threshold is None):
        raise ValueError("specify exactly one of num_clusters or distance_threshold")
    if num_clusters is not None and not 1 <= num_clusters <= n:
        raise ValueError(f"num_clusters must be in [1, {n}], got {num_clusters}")

    dist = _pairwise_distances(points)
    clusters: dict[int, list[int]] = {i: [i] for i in range(n)}
    target = num_clusters if num_clusters is not None else 1

    while len(clusters) > target:
        ids = sorted(clusters)
        best = None
        best_pair = None
        for ii, a in enumerate(ids):
            for b in ids[ii + 1:]:
                d = _cluster_distance(points, clusters[a], clusters[b], linkage, dist)
                if best is None or d < best:
                    best, best_pair = d, (a, b)
        if distance_threshold is not None and best > distance_threshold:
            break
        a, b = best_pair
        clusters[a] = sorted(clusters[a] + clusters[b])
        del clusters[b]

    labels = np.empty(n, dtype=int)
    for rank, cid in enumerate(sorted(clusters)):
        labels[clusters[cid]] = rank
    return ClusterAssignment(labels, len(clusters))


def dbscan(points, eps: float, min_pts: int) -> DbscanLabels:
    """Density-based clustering with radius ``eps`` and density ``min_pts``.

    A point is core when its closed eps-neighborhood (itself included)
    holds at least ``min_pts`` points. Clusters grow from core points in
    ascending index order; a border point joins the first cluster whose
    expansion reaches it. Unreached points are labeled -1.
    """
    points = as_float_matrix(points, "points")
    check_positive(eps, "eps")
    if min_pts < 1:
        raise ValueError(f"min_pts must be >= 1, got {min_pts}")
    n = points.shape[0]
    dist = _pairwise_distances(points)
    neighborhoods = [np.flatnonzero(dist[i] <= eps) for i in range(n)]
    core = np.array([len(nb) >= min_pts for nb in neighborhoods])

    UNSEEN = -2
    labels = np.full(n, UNSEEN, dtype=int)
    cluster = 0
    for i in range(n):
        if labels[i] != UNSEEN:
            continue
        if not core[i]:
            labels[i] = NOISE
            continue
        labels[i] = cluster
        queue = list(neighborhoods[i])
        pos = 0
        while pos < len(queue):
            q = queue[pos]
            pos += 1
            if labels[q] == NOISE:
                labels[q] = cluster  # border point claimed by first reaching cluster
            if labels[q] != UNSEEN:
                continue
            labels[q] = cluster
            if core[q]:
                queue.extend(neighborhoods[q])
        cluster += 1
    return DbscanLabels(labels)
