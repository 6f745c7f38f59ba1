"""Variance-bias exploration across cluster counts.

For each K on a grid: cut the tree, score the per-unit LRC distribution
with Tukey-hinge quartiles, and optionally run the confirm test.  K
selection stays with the analyst; an advisory marker only flags where the
IQR starts inflating.
"""

from dataclasses import dataclass

import numpy as np

from .cluster import cut
from .confirm import build_null_ensemble, confirm, ksperm
from .lrc import lrc_distribution

DEFAULT_GRID = (1, 5, 10, 25, 50, 100, 200)


@dataclass(frozen=True)
class KSummary:
    k: int
    min: float
    q1: float
    median: float
    q3: float
    max: float
    fraction_negative: float
    n_undefined: int
    d_observed: float = float("nan")
    p_value: float = float("nan")


@dataclass(frozen=True)
class ExploreSummary:
    rows: tuple
    advisory_k: int  # 0 when no IQR inflation was flagged

    def as_dicts(self):
        return [vars(r) | {} for r in self.rows]


def tukey_hinges(values):
    """Five-number summary with median-of-halves (hinge) quartiles."""
    v = np.sort(np.asarray(values, dtype=np.float64))
    n = v.size
    if n == 0:
        raise ValueError("empty sample")
    med = float(np.median(v))
    half = (n + 1) // 2  # halves include the median when n is odd
    lower = v[:half]
    upper = v[n - half:]
    return float(v[0]), float(np.median(lower)), med, float(np.median(upper)), float(v[-1])


def compare_k(frame, tree, k_grid=DEFAULT_GRID, exposure=None, outcome=None,
              confirm_options=None, iqr_factor=1.5):
    """Summarize the LRC distribution at each K on a strictly increasing grid.

    ``confirm_options`` (dict with r, b, seed) enables the permutation test
    per K; None skips it.
    """
    grid = sorted(set(int(k) for k in k_grid))
    n = frame.n_units
    if grid and (grid[0] < 1 or grid[-1] > n):
        raise ValueError(f"grid values must lie in [1, {n}]")
    rows = []
    for k in grid:
        assignment = cut(tree, k)
        dist = lrc_distribution(frame, assignment, exposure, outcome)
        lo, q1, med, q3, hi = tukey_hinges(dist.per_unit)
        frac_neg = float(np.mean(dist.per_unit < 0))
        d_obs = float("nan")
        p_val = float("nan")
        if confirm_options is not None:
            null = build_null_ensemble(
                frame, assignment.sizes, exposure, outcome,
                r=confirm_options.get("r", 100),
                seed=confirm_options.get("seed", 0),
            )
            d_obs, d_at = confirm(dist, null)
            result = ksperm(
                frame, assignment.sizes, exposure, outcome,
                null=null, d_observed=d_obs, d_location=d_at,
                b=confirm_options.get("b", 1000),
                seed=confirm_options.get("perm_seed", confirm_options.get("seed", 0) + 1),
            )
            p_val = result.p_value
        rows.append(KSummary(
            k=k, min=lo, q1=q1, median=med, q3=q3, max=hi,
            fraction_negative=frac_neg, n_undefined=dist.n_undefined,
            d_observed=d_obs, p_value=p_val,
        ))

    # advisory only: smallest K whose IQR jumps past the previous K's IQR
    # by the configured factor (heuristic, not part of the method itself)
    advisory_k = 0
    for prev, cur in zip(rows, rows[1:]):
        prev_iqr = prev.q3 - prev.q1
        cur_iqr = cur.q3 - cur.q1
        if prev_iqr > 0 and cur_iqr > iqr_factor * prev_iqr:
            advisory_k = cur.k
            break
    return ExploreSummary(rows=tuple(rows), advisory_k=advisory_k)


def size_histogram(assignment, bin_width):
    """Counts of clusters per size bin [i*w, (i+1)*w); totals equal K."""
    if bin_width < 1:
        raise ValueError("bin_width must be >= 1")
    sizes = np.asarray(assignment.sizes, dtype=np.int64)
    idx = sizes // bin_width
    counts = np.bincount(idx)
    return [
        {"lo": int(i * bin_width), "hi": int((i + 1) * bin_width), "count": int(c)}
        for i, c in enumerate(counts)
        if c > 0
    ]
