"""Agglomerative hierarchical clustering via the Lance-Williams recurrence.

Seven linkage methods (single linkage deliberately excluded: it chains
units into strings instead of compact matched blocks).  Merge ties are
broken by the smallest (node-id, node-id) pair so trees are identical
across platforms and backends.
"""

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import squareform

from . import _backend

LINKAGE_METHODS = {
    "ward.D": _backend.METHOD_WARD,
    "ward.D2": _backend.METHOD_WARD,  # recurrence on squared distances
    "complete": _backend.METHOD_COMPLETE,
    "average": _backend.METHOD_AVERAGE,
    "mcquitty": _backend.METHOD_MCQUITTY,
    "median": _backend.METHOD_MEDIAN,
    "centroid": _backend.METHOD_CENTROID,
}

# median/centroid linkage may produce height inversions; the rest are monotone
MONOTONE_METHODS = ("ward.D", "ward.D2", "complete", "average", "mcquitty")


@dataclass(frozen=True)
class Dendrogram:
    """Merge history: step s joins nodes merge_a[s] and merge_b[s]
    (leaves are 0..n-1) into node n+s at heights[s]."""

    method: str
    leaf_count: int
    merge_a: np.ndarray
    merge_b: np.ndarray
    heights: np.ndarray


@dataclass(frozen=True)
class ClusterAssignment:
    """Per-unit cluster labels in 1..k, numbered by first unit appearance."""

    k: int
    labels: np.ndarray
    sizes: np.ndarray


def agglomerate(distances, method="ward.D"):
    """Build a dendrogram from condensed pairwise distances."""
    if method not in LINKAGE_METHODS:
        raise ValueError(
            f"unknown linkage method {method!r}; choose from {sorted(LINKAGE_METHODS)}"
        )
    d = np.asarray(distances, dtype=np.float64)
    if not np.all(np.isfinite(d)):
        raise ValueError("distances must be finite")
    if np.any(d < 0):
        raise ValueError("distances must be nonnegative")
    dmat = squareform(d, checks=False).astype(np.float64)
    n = dmat.shape[0]
    if n < 2:
        raise ValueError("need at least two units")
    if method == "ward.D2":
        dmat = dmat * dmat
    merge_a, merge_b, heights = _backend.lw_linkage(dmat, LINKAGE_METHODS[method])
    if method == "ward.D2":
        heights = np.sqrt(heights)
    return Dendrogram(
        method=method,
        leaf_count=n,
        merge_a=np.asarray(merge_a),
        merge_b=np.asarray(merge_b),
        heights=np.asarray(heights),
    )


def cut(tree, k):
    """Cut the dendrogram into exactly k clusters (undo the last k-1 merges)."""
    n = tree.leaf_count
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}], got {k}")
    parent = np.full(2 * n - 1, -1, dtype=np.int64)
    for step in range(n - k):
        node = n + step
        parent[tree.merge_a[step]] = node
        parent[tree.merge_b[step]] = node

    def root(i):
        while parent[i] >= 0:
            i = parent[i]
        return i

    labels = np.empty(n, dtype=np.int64)
    label_of_root = {}
    for unit in range(n):
        r = root(unit)
        if r not in label_of_root:
            label_of_root[r] = len(label_of_root) + 1
        labels[unit] = label_of_root[r]
    sizes = np.bincount(labels, minlength=k + 1)[1:]
    return ClusterAssignment(k=k, labels=labels, sizes=sizes)
