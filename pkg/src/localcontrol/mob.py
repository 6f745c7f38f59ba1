"""Linear-model tree: recursive partitioning on one variable with a
simple linear regression fitted in each leaf.

Splits are chosen by exhaustive search over candidate thresholds (midpoints
of sorted unique partition values respecting min_size), minimizing the sum
of the two children's OLS residual sums of squares; a split is kept only
when the relative SSE reduction reaches min_gain.  Fitting is fully
deterministic.
"""

import json
from dataclasses import dataclass

import numpy as np


@dataclass
class MobNode:
    node_id: int
    n: int
    lo: float
    hi: float
    # internal
    threshold: float = float("nan")
    left: "MobNode | None" = None
    right: "MobNode | None" = None
    # leaf
    intercept: float = float("nan")
    slope: float = float("nan")

    @property
    def is_leaf(self):
        return self.left is None

    def to_dict(self):
        if self.is_leaf:
            return {
                "node": self.node_id,
                "n": self.n,
                "interval": [self.lo, self.hi],
                "intercept": self.intercept,
                "slope": self.slope,
            }
        return {
            "node": self.node_id,
            "n": self.n,
            "threshold": self.threshold,
            "left": self.left.to_dict(),
            "right": self.right.to_dict(),
        }


def _ols(x, y):
    """(intercept, slope, sse); slope 0 when the regressor is constant."""
    n = x.size
    xm = x.mean()
    ym = y.mean()
    sxx = float(np.sum((x - xm) ** 2))
    if sxx <= 0.0:
        resid = y - ym
        return ym, 0.0, float(resid @ resid)
    slope = float(np.sum((x - xm) * (y - ym))) / sxx
    intercept = ym - slope * xm
    resid = y - (intercept + slope * x)
    return intercept, slope, float(resid @ resid)


def _candidate_scan(pv_sorted, x_sorted, y_sorted, min_size):
    """Best threshold position by summed child OLS SSE (prefix-sum scan).

    Children with a constant regressor are not eligible.  Returns
    (best_sse, pos) or (inf, -1).
    """
    n = pv_sorted.size
    pos = np.arange(min_size, n - min_size + 1)
    pos = pos[pv_sorted[pos] > pv_sorted[pos - 1]]
    if pos.size == 0:
        return np.inf, -1
    cx = np.cumsum(x_sorted)
    cy = np.cumsum(y_sorted)
    cxx = np.cumsum(x_sorted * x_sorted)
    cyy = np.cumsum(y_sorted * y_sorted)
    cxy = np.cumsum(x_sorted * y_sorted)

    def sse(sx, sy, sxx, syy, sxy, m):
        sxx_c = sxx - sx * sx / m
        syy_c = syy - sy * sy / m
        sxy_c = sxy - sx * sy / m
        bad = sxx_c <= 1e-12
        with np.errstate(divide="ignore", invalid="ignore"):
            out = syy_c - sxy_c * sxy_c / sxx_c
        return np.where(bad, np.inf, np.maximum(out, 0.0))

    i = pos - 1
    left = sse(cx[i], cy[i], cxx[i], cyy[i], cxy[i], pos.astype(np.float64))
    right = sse(cx[-1] - cx[i], cy[-1] - cy[i], cxx[-1] - cxx[i],
                cyy[-1] - cyy[i], cxy[-1] - cxy[i], (n - pos).astype(np.float64))
    total = left + right
    j = int(np.argmin(total))
    if not np.isfinite(total[j]):
        return np.inf, -1
    return float(total[j]), int(pos[j])


def fit_mob(response, regressor, partition_var, min_size=100, max_depth=3,
            min_gain=0.02):
    """Fit the partitioning tree on aligned vectors."""
    y = np.asarray(response, dtype=np.float64)
    x = np.asarray(regressor, dtype=np.float64)
    pv = np.asarray(partition_var, dtype=np.float64)
    if not (y.shape == x.shape == pv.shape) or y.ndim != 1:
        raise ValueError("response, regressor, partition_var must be aligned vectors")
    if y.size < 2 * min_size:
        raise ValueError(f"need at least {2 * min_size} rows")
    if np.all(x == x[0]):
        raise ValueError("regressor is constant")

    counter = [0]

    def build(rows, depth, lo, hi):
        counter[0] += 1
        node = MobNode(node_id=counter[0], n=rows.size, lo=lo, hi=hi)
        yv, xv, pvv = y[rows], x[rows], pv[rows]
        intercept, slope, sse_parent = _ols(xv, yv)
        do_split = False
        if depth < max_depth and rows.size >= 2 * min_size and sse_parent > 0:
            order = np.argsort(pvv, kind="stable")
            best_sse, pos = _candidate_scan(pvv[order], xv[order], yv[order], min_size)
            if pos >= 0 and (sse_parent - best_sse) / sse_parent >= min_gain:
                do_split = True
        if not do_split:
            node.intercept = intercept
            node.slope = slope
            return node
        thr = 0.5 * (pvv[order][pos - 1] + pvv[order][pos])
        node.threshold = float(thr)
        node.left = build(rows[order[:pos]], depth + 1, lo, float(thr))
        node.right = build(rows[order[pos:]], depth + 1, float(thr), hi)
        return node

    return build(np.arange(y.size, dtype=np.int64), 0, -np.inf, np.inf)


def predict_mob(tree, regressor, partition_var):
    """Route by the partitioning variable, then evaluate the leaf's line."""
    node = tree
    while not node.is_leaf:
        node = node.left if partition_var <= node.threshold else node.right
    return node.intercept + node.slope * regressor


def leaves(tree):
    out = []

    def walk(node):
        if node.is_leaf:
            out.append(node)
        else:
            walk(node.left)
            walk(node.right)

    walk(tree)
    return sorted(out, key=lambda nd: nd.lo)


def mob_table(tree, observed_range=None):
    """One row per leaf ordered by interval; infinite bounds are rendered
    with the observed partition-variable range when provided."""
    rows = []
    for leaf in leaves(tree):
        lo, hi = leaf.lo, leaf.hi
        if observed_range is not None:
            if not np.isfinite(lo):
                lo = observed_range[0]
            if not np.isfinite(hi):
                hi = observed_range[1]
        rows.append({
            "node": leaf.node_id,
            "intercept": leaf.intercept,
            "slope": leaf.slope,
            "lo": float(lo),
            "hi": float(hi),
            "n": leaf.n,
        })
    return rows


def to_json(tree, **kwargs):
    return json.dumps(tree.to_dict(), **kwargs)
