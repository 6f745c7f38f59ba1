"""Regression random forest with out-of-bag permutation importance and
partial dependence curves.

Trees are CART-style variance-reduction trees on bootstrap samples, mtry
features per split, fully deterministic given the seed: per-tree RNG
streams are derived statelessly from (seed, tree-index) so results do not
depend on scheduling, and split ties go to the lowest variable index then
the lowest threshold.
"""

from dataclasses import dataclass, field

import numpy as np

from . import _backend


@dataclass
class RegressionTree:
    """Flat node arrays; feature[i] == -1 marks a leaf with prediction value[i]."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    def predict(self, x):
        n = x.shape[0]
        node = np.zeros(n, dtype=np.int64)
        active = self.feature[node] >= 0
        while active.any():
            idx = np.flatnonzero(active)
            nd = node[idx]
            f = self.feature[nd]
            go_left = x[idx, f] <= self.threshold[nd]
            node[idx] = np.where(go_left, self.left[nd], self.right[nd])
            active[idx] = self.feature[node[idx]] >= 0
        return self.value[node]


@dataclass
class Forest:
    trees: list
    oob_masks: list
    node_purity: np.ndarray  # SSE decrease per feature, summed over all splits
    mtry: int
    min_leaf: int
    seed: int
    feature_names: tuple = ()
    constant_response: bool = False

    @property
    def n_features(self):
        return self.node_purity.shape[0]

    def predict(self, x):
        x = np.asarray(x, dtype=np.float64)
        out = np.zeros(x.shape[0], dtype=np.float64)
        for tree in self.trees:
            out += tree.predict(x)
        return out / len(self.trees)


@dataclass(frozen=True)
class ImportanceReport:
    """Per-variable importance, ordered by descending pct_inc_mse."""

    variables: tuple
    pct_inc_mse: np.ndarray
    raw_inc_mse: np.ndarray
    inc_node_purity: np.ndarray

    def rows(self):
        order = np.argsort(-self.pct_inc_mse, kind="stable")
        return [
            {
                "variable": self.variables[i],
                "pct_inc_mse": float(self.pct_inc_mse[i]),
                "raw_inc_mse": float(self.raw_inc_mse[i]),
                "inc_node_purity": float(self.inc_node_purity[i]),
            }
            for i in order
        ]


@dataclass(frozen=True)
class PartialDependence:
    variable: str
    grid: np.ndarray
    values: np.ndarray


def _tree_rng(seed, tree_index, stream):
    # stream 0: bootstrap + split sampling; stream 1: importance permutations
    return np.random.default_rng(
        np.random.SeedSequence(entropy=seed, spawn_key=(tree_index, stream))
    )


def _build_tree(xb, yb, mtry, min_leaf, rng, purity):
    n, p = xb.shape
    feature, threshold, left, right, value = [], [], [], [], []

    def new_node():
        feature.append(-1)
        threshold.append(np.nan)
        left.append(-1)
        right.append(-1)
        value.append(np.nan)
        return len(feature) - 1

    root = new_node()
    stack = [(root, np.arange(n, dtype=np.int64))]
    while stack:
        node, idx = stack.pop()
        y_node = yb[idx]
        value[node] = float(y_node.mean())
        if idx.size < 2 * min_leaf or np.all(y_node == y_node[0]):
            continue
        feats = np.sort(rng.permutation(p)[:mtry])
        best_gain = 0.0
        best = None
        for j in feats:
            xj = xb[idx, j]
            order = np.argsort(xj, kind="stable")
            xs = np.ascontiguousarray(xj[order])
            ys = np.ascontiguousarray(y_node[order])
            gain, pos = _backend.best_split_sorted(xs, ys, min_leaf)
            if pos >= 0 and gain > best_gain:
                best_gain = gain
                best = (j, order, pos, 0.5 * (xs[pos - 1] + xs[pos]))
        if best is None:
            continue
        j, order, pos, thr = best
        purity[j] += best_gain
        feature[node] = int(j)
        threshold[node] = float(thr)
        nl = new_node()
        nr = new_node()
        left[node] = nl
        right[node] = nr
        # right pushed first so the left child is processed next (fixed
        # traversal order keeps the rng stream reproducible)
        stack.append((nr, idx[order[pos:]]))
        stack.append((nl, idx[order[:pos]]))

    return RegressionTree(
        feature=np.array(feature, dtype=np.int64),
        threshold=np.array(threshold, dtype=np.float64),
        left=np.array(left, dtype=np.int64),
        right=np.array(right, dtype=np.int64),
        value=np.array(value, dtype=np.float64),
    )


def fit_forest(features, response, n_trees=500, mtry=None, min_leaf=5, seed=0,
               feature_names=()):
    """Fit a bagged forest of variance-reduction regression trees."""
    x = np.ascontiguousarray(features, dtype=np.float64)
    y = np.ascontiguousarray(response, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] != y.shape[0]:
        raise ValueError("features must be an n x p matrix aligned with response")
    n, p = x.shape
    if n < 10:
        raise ValueError("need at least 10 rows")
    if not np.all(np.isfinite(y)):
        raise ValueError("response must be finite")
    if mtry is None:
        mtry = max(1, p // 3)
    mtry = min(mtry, p)
    constant = bool(np.all(y == y[0]))

    trees = []
    oob_masks = []
    purity = np.zeros(p, dtype=np.float64)
    for t in range(n_trees):
        rng = _tree_rng(seed, t, 0)
        while True:
            boot = rng.integers(0, n, size=n)
            oob = np.ones(n, dtype=bool)
            oob[boot] = False
            if oob.any():
                break
        trees.append(_build_tree(x[boot], y[boot], mtry, min_leaf, rng, purity))
        oob_masks.append(oob)
    return Forest(
        trees=trees,
        oob_masks=oob_masks,
        node_purity=purity,
        mtry=mtry,
        min_leaf=min_leaf,
        seed=seed,
        feature_names=tuple(feature_names),
        constant_response=constant,
    )


def oob_importance(forest, features, response):
    """Permutation importance over each tree's out-of-bag rows.

    pct_inc_mse is the mean oob-MSE increase divided by its standard error
    over trees; raw_inc_mse is the unscaled mean; inc_node_purity is the
    forest-wide SSE decrease per variable.
    """
    x = np.ascontiguousarray(features, dtype=np.float64)
    y = np.ascontiguousarray(response, dtype=np.float64)
    p = forest.n_features
    t_count = len(forest.trees)
    inc = np.zeros((t_count, p), dtype=np.float64)
    for t, (tree, oob) in enumerate(zip(forest.trees, forest.oob_masks)):
        xo = x[oob].copy()
        yo = y[oob]
        mse0 = float(np.mean((tree.predict(xo) - yo) ** 2))
        rng = _tree_rng(forest.seed, t, 1)
        for j in range(p):
            saved = xo[:, j].copy()
            xo[:, j] = saved[rng.permutation(saved.shape[0])]
            mse_j = float(np.mean((tree.predict(xo) - yo) ** 2))
            xo[:, j] = saved
            inc[t, j] = mse_j - mse0
    mean = inc.mean(axis=0)
    if t_count > 1:
        se = inc.std(axis=0, ddof=1) / np.sqrt(t_count)
    else:
        se = np.zeros(p)
    pct = np.where(se > 0, np.divide(mean, se, out=np.zeros(p), where=se > 0), 0.0)
    names = forest.feature_names or tuple(f"x{j}" for j in range(p))
    return ImportanceReport(
        variables=names,
        pct_inc_mse=pct,
        raw_inc_mse=mean,
        inc_node_purity=forest.node_purity.copy(),
    )


def partial_dependence(forest, features, variable, grid_size=25):
    """Forest predictions averaged over the data with one feature forced
    to each point of an empirical-quantile grid."""
    x = np.ascontiguousarray(features, dtype=np.float64)
    if isinstance(variable, str):
        if variable not in forest.feature_names:
            raise KeyError(f"unknown variable {variable!r}")
        j = forest.feature_names.index(variable)
        name = variable
    else:
        j = int(variable)
        if not 0 <= j < x.shape[1]:
            raise KeyError(f"feature index {j} out of range")
        name = forest.feature_names[j] if forest.feature_names else f"x{j}"
    grid = np.unique(np.quantile(x[:, j], np.linspace(0.0, 1.0, grid_size)))
    n = x.shape[0]
    stacked = np.tile(x, (grid.size, 1))
    for g, val in enumerate(grid):
        stacked[g * n:(g + 1) * n, j] = val
    pred = forest.predict(stacked)
    values = pred.reshape(grid.size, n).mean(axis=1)
    return PartialDependence(variable=name, grid=grid, values=values)
