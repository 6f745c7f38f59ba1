"""Pure numpy implementations of the hot kernels.

Selected by :mod:`localcontrol._backend` when the compiled extension is
unavailable (or forced via LOCALCONTROL_BACKEND=python).  Semantics are
identical to the Cython kernels: linkage merges resolve ties by the
lexicographically smallest (node-id, node-id) pair, and split scans keep
the first (lowest-threshold) maximizer.
"""

import numpy as np
from scipy.stats import rankdata

# Lance-Williams method codes shared with the compiled kernels.
METHOD_WARD = 0
METHOD_COMPLETE = 1
METHOD_AVERAGE = 2
METHOD_MCQUITTY = 3
METHOD_MEDIAN = 4
METHOD_CENTROID = 5


def _lw_update(method, d_ik, d_jk, d_ij, n_i, n_j, n_k):
    """Dissimilarity between the merger of clusters i, j and cluster(s) k."""
    if method == METHOD_WARD:
        t = n_i + n_j + n_k
        return ((n_i + n_k) * d_ik + (n_j + n_k) * d_jk - n_k * d_ij) / t
    if method == METHOD_COMPLETE:
        return np.maximum(d_ik, d_jk)
    if method == METHOD_AVERAGE:
        return (n_i * d_ik + n_j * d_jk) / (n_i + n_j)
    if method == METHOD_MCQUITTY:
        return 0.5 * d_ik + 0.5 * d_jk
    if method == METHOD_MEDIAN:
        return 0.5 * d_ik + 0.5 * d_jk - 0.25 * d_ij
    if method == METHOD_CENTROID:
        s = n_i + n_j
        return (n_i * d_ik + n_j * d_jk) / s - (n_i * n_j * d_ij) / (s * s)
    raise ValueError(f"unknown linkage method code {method}")


def lw_linkage(dmat, method):
    """Agglomerate a full symmetric dissimilarity matrix.

    ``dmat`` is consumed (mutated).  Returns (merge_a, merge_b, heights)
    where leaves are nodes 0..n-1 and the merge at step s creates node n+s.
    merge_a < merge_b by node id.
    """
    d = np.asarray(dmat, dtype=np.float64)
    n = d.shape[0]
    d[np.diag_indices(n)] = np.inf
    size = np.ones(n, dtype=np.float64)
    node_id = np.arange(n, dtype=np.int64)
    merge_a = np.empty(n - 1, dtype=np.int64)
    merge_b = np.empty(n - 1, dtype=np.int64)
    heights = np.empty(n - 1, dtype=np.float64)

    for step in range(n - 1):
        m = d.min()
        if not np.isfinite(m):
            raise ValueError("non-finite dissimilarity encountered during linkage")
        rows, cols = np.nonzero(d == m)
        best = None
        best_slots = None
        for si, sj in zip(rows, cols):
            if si >= sj:
                continue
            ia, ib = node_id[si], node_id[sj]
            key = (min(ia, ib), max(ia, ib))
            if best is None or key < best:
                best = key
                best_slots = (si, sj)
        si, sj = best_slots
        merge_a[step] = best[0]
        merge_b[step] = best[1]
        heights[step] = m

        d_ik = d[si, :]
        d_jk = d[sj, :]
        new = _lw_update(method, d_ik, d_jk, m, size[si], size[sj], size)
        new[si] = np.inf
        new[sj] = np.inf
        d[si, :] = new
        d[:, si] = new
        d[sj, :] = np.inf
        d[:, sj] = np.inf
        size[si] += size[sj]
        node_id[si] = n + step

    return merge_a, merge_b, heights


def best_split_sorted(xs, ys, min_leaf):
    """Best variance-reducing split of a presorted feature column.

    ``xs`` ascending; left child takes positions [0, pos).  Returns
    (gain, pos) with gain = decrease in total SSE, or (-1.0, -1) when no
    valid split exists.  Ties keep the smallest pos.
    """
    n = xs.shape[0]
    if n < 2 * min_leaf:
        return -1.0, -1
    cs = np.cumsum(ys)
    total = cs[-1]
    pos = np.arange(min_leaf, n - min_leaf + 1)
    ok = xs[pos] > xs[pos - 1]
    if not ok.any():
        return -1.0, -1
    pos = pos[ok]
    sl = cs[pos - 1]
    sr = total - sl
    score = sl * sl / pos + sr * sr / (n - pos)
    i = int(np.argmax(score))
    gain = float(score[i] - total * total / n)
    return gain, int(pos[i])


def grouped_spearman(x, y, order, offsets):
    """Spearman rho (midrank ties) of (x, y) within each contiguous group.

    ``order`` holds unit indices, groups are order[offsets[g]:offsets[g+1]].
    Undefined groups (size < 2 or constant ranks) yield NaN.
    """
    k = len(offsets) - 1
    out = np.empty(k, dtype=np.float64)
    for g in range(k):
        idx = order[offsets[g]:offsets[g + 1]]
        if idx.shape[0] < 2:
            out[g] = np.nan
            continue
        rx = rankdata(x[idx])
        ry = rankdata(y[idx])
        dx = rx - rx.mean()
        dy = ry - ry.mean()
        sxx = float(dx @ dx)
        syy = float(dy @ dy)
        if sxx <= 0.0 or syy <= 0.0:
            out[g] = np.nan
            continue
        r = float(dx @ dy) / np.sqrt(sxx * syy)
        out[g] = min(1.0, max(-1.0, r))
    return out
