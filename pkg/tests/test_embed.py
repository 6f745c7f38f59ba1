import numpy as np
import pytest

from conftest import mahalanobis_sq_oracle, make_frame, make_schema
from localcontrol.embed import pairwise_distances, principal_coordinates


def random_frame(rng, n=10, p=3, correlated=False):
    schema = make_schema(n_confounders=p)
    base = rng.normal(size=(n, p))
    if correlated:
        mix = rng.normal(size=(p, p)) + np.eye(p)
        base = base @ mix
    cols = {"x": rng.normal(size=n), "y": rng.normal(size=n)}
    for j in range(p):
        cols[f"c{j}"] = base[:, j]
    return make_frame(cols, schema=schema)


def test_perfectly_correlated_pair_keeps_one_component():
    rng = np.random.default_rng(0)
    c0 = rng.normal(size=30)
    frame = make_frame({"x": rng.normal(size=30), "y": rng.normal(size=30),
                        "c0": c0, "c1": 2.0 * c0 + 1.0})
    emb = principal_coordinates(frame)
    assert emb.n_components == 1


def test_independent_normals_give_unit_eigenvalues():
    rng = np.random.default_rng(1)
    n = 20000
    frame = make_frame({"x": rng.normal(size=n), "y": rng.normal(size=n),
                        "c0": rng.normal(size=n), "c1": rng.normal(size=n)})
    emb = principal_coordinates(frame)
    assert np.allclose(emb.eigenvalues, 1.0, atol=0.05)


def test_axes_orthonormal_and_scores_whitened():
    rng = np.random.default_rng(2)
    frame = random_frame(rng, n=50, p=4, correlated=True)
    emb = principal_coordinates(frame)
    gram = emb.axes.T @ emb.axes
    assert np.allclose(gram, np.eye(emb.n_components), atol=1e-10)
    assert np.all(np.diff(emb.eigenvalues) <= 1e-12)
    assert np.allclose(emb.scores.std(axis=0, ddof=1), 1.0, atol=1e-8)


def test_euclidean_matches_mahalanobis_oracle():
    rng = np.random.default_rng(3)
    for _ in range(20):
        frame = random_frame(rng, n=10, p=3, correlated=True)
        emb = principal_coordinates(frame, tolerance=1e-12)
        x = frame.matrix(frame.schema.confounders)
        d = pairwise_distances(emb)
        idx = 0
        for i in range(10):
            for j in range(i + 1, 10):
                expected = mahalanobis_sq_oracle(x, i, j)
                assert d[idx] ** 2 == pytest.approx(expected, abs=1e-8, rel=1e-8)
                idx += 1


def test_affine_rescaling_leaves_distances_unchanged():
    rng = np.random.default_rng(4)
    frame = random_frame(rng, n=15, p=3, correlated=True)
    d0 = pairwise_distances(principal_coordinates(frame))
    cols = {n: frame.column(n).copy() for n in frame.schema.names() if n != "id"}
    cols["c1"] = -3.5 * cols["c1"] + 12.0
    frame2 = make_frame(cols, schema=frame.schema)
    d1 = pairwise_distances(principal_coordinates(frame2))
    assert np.allclose(d0, d1, atol=1e-8)


def test_confounder_order_irrelevant():
    rng = np.random.default_rng(5)
    frame = random_frame(rng, n=15, p=3, correlated=True)
    d0 = pairwise_distances(principal_coordinates(frame, confounders=("c0", "c1", "c2")))
    d1 = pairwise_distances(principal_coordinates(frame, confounders=("c2", "c0", "c1")))
    assert np.allclose(d0, d1, atol=1e-10)


def test_eigenvalue_sum_bounded_by_dimension():
    rng = np.random.default_rng(6)
    frame = random_frame(rng, n=40, p=5, correlated=True)
    emb = principal_coordinates(frame)
    assert emb.eigenvalues.sum() <= 5 + 1e-8
    if emb.n_components == 5:
        assert emb.eigenvalues.sum() == pytest.approx(5.0, abs=1e-8)


def test_constant_confounder_rejected():
    rng = np.random.default_rng(7)
    frame = make_frame({"x": rng.normal(size=10), "y": rng.normal(size=10),
                        "c0": np.ones(10), "c1": rng.normal(size=10)})
    with pytest.raises(ValueError, match="constant confounder"):
        principal_coordinates(frame)


def test_duplicate_units_distance_zero():
    rng = np.random.default_rng(8)
    base = rng.normal(size=(6, 3))
    base[3] = base[0]
    cols = {"x": rng.normal(size=6), "y": rng.normal(size=6)}
    for j in range(3):
        cols[f"c{j}"] = base[:, j]
    emb = principal_coordinates(make_frame(cols, schema=make_schema(3)))
    d = pairwise_distances(emb)
    # condensed index of pair (0, 3) with n=6
    assert d[2] == pytest.approx(0.0, abs=1e-10)


def test_pairwise_matches_bruteforce_and_triangle():
    rng = np.random.default_rng(9)
    frame = random_frame(rng, n=20, p=3, correlated=True)
    emb = principal_coordinates(frame)
    d = pairwise_distances(emb)
    s = emb.scores
    full = np.zeros((20, 20))
    idx = 0
    for i in range(20):
        for j in range(i + 1, 20):
            brute = np.sqrt(np.sum((s[i] - s[j]) ** 2))
            assert d[idx] == pytest.approx(brute, abs=1e-10)
            full[i, j] = full[j, i] = d[idx]
            idx += 1
    for i in range(20):
        for j in range(20):
            for k in range(20):
                assert full[i, j] <= full[i, k] + full[k, j] + 1e-9
