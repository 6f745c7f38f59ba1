"""Local rank correlations and their per-unit-weighted distribution.

Each cluster's Spearman correlation between exposure and outcome is the
local effect size; every unit in a size-N cluster inherits its cluster's
value, so the per-unit distribution weights clusters by membership.
"""

from dataclasses import dataclass

import numpy as np

from . import _backend


@dataclass(frozen=True)
class LRCDistribution:
    """Per-cluster effect sizes plus the cluster-size-expanded per-unit view.

    ``per_cluster`` rows are (cluster_id, value-or-NaN, size); clusters with
    undefined correlations (size 1 or constant ranks) are excluded from
    ``per_unit`` and their unit count recorded in ``n_undefined``.
    """

    k: int
    cluster_ids: np.ndarray
    values: np.ndarray      # NaN marks undefined clusters
    sizes: np.ndarray
    per_unit: np.ndarray
    n_undefined: int

    @property
    def per_cluster(self):
        return list(zip(self.cluster_ids.tolist(), self.values.tolist(), self.sizes.tolist()))


@dataclass(frozen=True)
class ECDF:
    """Right-continuous empirical CDF: sorted unique support with
    cumulative probabilities ending at exactly 1."""

    support: np.ndarray
    probs: np.ndarray

    def evaluate(self, points):
        points = np.asarray(points, dtype=np.float64)
        idx = np.searchsorted(self.support, points, side="right")
        padded = np.concatenate([[0.0], self.probs])
        return padded[idx]


def spearman(x, y):
    """Spearman rank correlation with midrank tie handling.

    Returns NaN when either vector's ranks are constant.
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("inputs must be equal-length vectors")
    if x.size < 2:
        raise ValueError("need at least two observations")
    order = np.arange(x.size, dtype=np.int64)
    offsets = np.array([0, x.size], dtype=np.int64)
    return float(_backend.grouped_spearman(x, y, order, offsets)[0])


def lrc_distribution(frame, assignment, exposure=None, outcome=None):
    """One Spearman per cluster over the assignment's units."""
    if exposure is None:
        exposure = frame.schema.exposure
    if outcome is None:
        outcome = frame.schema.outcome
    x = np.ascontiguousarray(frame.column(exposure), dtype=np.float64)
    y = np.ascontiguousarray(frame.column(outcome), dtype=np.float64)
    labels = assignment.labels
    if labels.shape[0] != x.shape[0]:
        raise ValueError("assignment does not cover the frame's units")
    return lrc_from_labels(x, y, labels, assignment.k)


def lrc_from_labels(x, y, labels, k):
    """Grouped Spearman over labels in 1..k, expanded to per-unit values."""
    order = np.argsort(labels, kind="stable").astype(np.int64)
    sizes = np.bincount(labels, minlength=k + 1)[1:]
    offsets = np.concatenate([[0], np.cumsum(sizes)]).astype(np.int64)
    values = _backend.grouped_spearman(
        np.ascontiguousarray(x, dtype=np.float64),
        np.ascontiguousarray(y, dtype=np.float64),
        order,
        offsets,
    )
    defined = ~np.isnan(values)
    per_unit = np.repeat(values[defined], sizes[defined])
    n_undefined = int(sizes[~defined].sum())
    return LRCDistribution(
        k=k,
        cluster_ids=np.arange(1, k + 1, dtype=np.int64),
        values=values,
        sizes=sizes.astype(np.int64),
        per_unit=per_unit,
        n_undefined=n_undefined,
    )


def ecdf(values):
    """Empirical CDF of a nonempty sample."""
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        raise ValueError("empty sample")
    support, counts = np.unique(values, return_counts=True)
    probs = np.cumsum(counts) / values.size
    probs[-1] = 1.0
    return ECDF(support=support, probs=probs)


def ks_distance(a, b):
    """Two-sample KS statistic on the pooled support.

    Returns (d, at): the maximum vertical gap and the smallest support
    point achieving it.
    """
    pooled = np.union1d(a.support, b.support)
    gap = np.abs(a.evaluate(pooled) - b.evaluate(pooled))
    # quantize so that mathematically tied gaps resolve to the smallest point
    i = int(np.argmax(np.round(gap, 12)))
    return float(gap.max()), float(pooled[i])
