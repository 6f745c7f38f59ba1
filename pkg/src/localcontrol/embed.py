"""Whitened principal-coordinate embedding of the confounder space.

Euclidean distance between embedded units equals Mahalanobis distance in
the original confounder space, so downstream clustering matches units on
all confounders jointly, scale-free.
"""

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import pdist

DEFAULT_TOLERANCE = 1e-9


@dataclass(frozen=True)
class Embedding:
    """Correlation-matrix PCA of standardized confounders, whitened so
    every retained score column has unit sample variance."""

    variables: tuple
    means: np.ndarray
    scales: np.ndarray
    axes: np.ndarray        # columns = eigenvectors, descending eigenvalue
    eigenvalues: np.ndarray
    scores: np.ndarray      # n_units x n_retained

    @property
    def n_components(self):
        return self.scores.shape[1]


def principal_coordinates(frame, confounders=None, tolerance=DEFAULT_TOLERANCE):
    """Embed units into standardized, orthogonal principal coordinates.

    Components with eigenvalue <= tolerance * max eigenvalue are dropped;
    the rest are scaled by 1/sqrt(eigenvalue) (whitening).
    """
    if confounders is None:
        confounders = frame.schema.confounders
    confounders = tuple(confounders)
    if len(confounders) < 2:
        raise ValueError("need at least two confounders")
    x = frame.matrix(confounders)
    n = x.shape[0]
    if n < 3:
        raise ValueError("need at least three units")
    means = x.mean(axis=0)
    scales = x.std(axis=0, ddof=1)
    if np.any(scales <= 0):
        bad = confounders[int(np.argmin(scales))]
        raise ValueError(f"constant confounder {bad!r}")
    xs = (x - means) / scales
    corr = (xs.T @ xs) / (n - 1)
    eigvals, eigvecs = np.linalg.eigh(corr)
    order = np.argsort(eigvals)[::-1]
    eigvals = eigvals[order]
    eigvecs = eigvecs[:, order]
    # deterministic sign: largest-magnitude loading positive
    for j in range(eigvecs.shape[1]):
        k = int(np.argmax(np.abs(eigvecs[:, j])))
        if eigvecs[k, j] < 0:
            eigvecs[:, j] = -eigvecs[:, j]
    keep = eigvals > tolerance * eigvals[0]
    if not keep.any():
        raise ValueError("degenerate confounder matrix: no retained components")
    eigvals = eigvals[keep]
    eigvecs = eigvecs[:, keep]
    scores = (xs @ eigvecs) / np.sqrt(eigvals)
    return Embedding(
        variables=confounders,
        means=means,
        scales=scales,
        axes=eigvecs,
        eigenvalues=eigvals,
        scores=scores,
    )


def pairwise_distances(embedding):
    """Condensed (i < j order) Euclidean distances between embedded units."""
    if embedding.scores.shape[0] < 2:
        raise ValueError("need at least two units")
    return pdist(embedding.scores, metric="euclidean")
