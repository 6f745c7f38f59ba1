import numpy as np
import pytest

from conftest import make_frame
from localcontrol.cluster import ClusterAssignment, agglomerate, cut
from localcontrol.embed import pairwise_distances, principal_coordinates
from localcontrol.explore import compare_k, size_histogram, tukey_hinges
from localcontrol.lrc import lrc_distribution, spearman


def blob_frame(rng, n_per=20):
    centers = np.array([[0.0, 0.0], [50.0, 0.0]])
    which = np.repeat([0, 1], n_per)
    pts = centers[which] + rng.normal(size=(2 * n_per, 2))
    x = rng.normal(size=2 * n_per)
    y = np.where(which == 0, x, -x) + 0.01 * rng.normal(size=2 * n_per)
    return make_frame({"x": x, "y": y, "c0": pts[:, 0], "c1": pts[:, 1]})


def tree_of(frame, method="ward.D"):
    return agglomerate(pairwise_distances(principal_coordinates(frame)), method)


def test_tukey_hinges_odd_and_even():
    assert tukey_hinges([1, 2, 3, 4, 5]) == (1.0, 2.0, 3.0, 4.0, 5.0)
    assert tukey_hinges([1, 2, 3, 4]) == (1.0, 1.5, 2.5, 3.5, 4.0)


def test_k1_row_degenerate():
    rng = np.random.default_rng(0)
    frame = blob_frame(rng)
    summary = compare_k(frame, tree_of(frame), k_grid=[1])
    row = summary.rows[0]
    rho = spearman(frame.column("x"), frame.column("y"))
    assert row.min == row.median == row.max == pytest.approx(rho)
    assert row.q3 - row.q1 == 0.0


def test_quartiles_ordered_and_grid_increasing():
    rng = np.random.default_rng(1)
    frame = blob_frame(rng)
    summary = compare_k(frame, tree_of(frame), k_grid=[10, 1, 4, 2])
    ks = [r.k for r in summary.rows]
    assert ks == sorted(set(ks))
    for r in summary.rows:
        assert r.min <= r.q1 <= r.median <= r.q3 <= r.max


def test_single_k_matches_direct_computation():
    rng = np.random.default_rng(2)
    frame = blob_frame(rng)
    tree = tree_of(frame)
    summary = compare_k(frame, tree, k_grid=[2])
    dist = lrc_distribution(frame, cut(tree, 2))
    lo, q1, med, q3, hi = tukey_hinges(dist.per_unit)
    row = summary.rows[0]
    assert (row.min, row.q1, row.median, row.q3, row.max) == (lo, q1, med, q3, hi)
    assert row.fraction_negative == pytest.approx(np.mean(dist.per_unit < 0))


def test_confirm_options_populate_columns():
    rng = np.random.default_rng(3)
    frame = blob_frame(rng)
    summary = compare_k(frame, tree_of(frame), k_grid=[2],
                        confirm_options={"r": 5, "b": 19, "seed": 0})
    row = summary.rows[0]
    assert 0.0 <= row.d_observed <= 1.0
    assert 1 / 20 <= row.p_value <= 1.0


def test_deterministic_summary():
    rng = np.random.default_rng(4)
    frame = blob_frame(rng)
    tree = tree_of(frame)
    s1 = compare_k(frame, tree, k_grid=[1, 2, 5])
    s2 = compare_k(frame, tree, k_grid=[1, 2, 5])
    assert repr(s1.rows) == repr(s2.rows)


class TestSizeHistogram:
    def test_all_singletons(self):
        a = ClusterAssignment(k=5, labels=np.arange(1, 6), sizes=np.ones(5, dtype=int))
        bins = size_histogram(a, bin_width=10)
        assert len(bins) == 1
        assert bins[0]["count"] == 5

    def test_counting_example(self):
        a = ClusterAssignment(k=3, labels=np.ones(60, dtype=int),
                              sizes=np.array([10, 20, 30]))
        bins = size_histogram(a, bin_width=15)
        assert [(b["lo"], b["hi"], b["count"]) for b in bins] == [
            (0, 15, 1), (15, 30, 1), (30, 45, 1)]

    def test_totals_equal_k(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            k = int(rng.integers(2, 15))
            sizes = rng.integers(1, 40, size=k)
            a = ClusterAssignment(k=k, labels=np.repeat(np.arange(1, k + 1), sizes),
                                  sizes=sizes)
            bins = size_histogram(a, bin_width=int(rng.integers(1, 12)))
            assert sum(b["count"] for b in bins) == k
