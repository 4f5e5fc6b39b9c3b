from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from codai.stats import elbow, kmeans_fit
from codai.stats.kmeans import suggest_k


def blobs(seed=0, n=30, sigma=1.0, sep=10.0):
    rng = np.random.default_rng(seed)
    centers = np.array([[0.0, 0.0], [sep * sigma, 0.0], [0.0, sep * sigma]])
    X = np.vstack([c + rng.normal(0, sigma, (n, 2)) for c in centers])
    return X, np.repeat(np.arange(3), n)


def same_partition(a, b) -> bool:
    pairs = set(zip(a.tolist(), b.tolist()))
    return len(pairs) == len(set(a.tolist())) == len(set(b.tolist()))


def test_three_blobs():
    X, truth = blobs()
    model = kmeans_fit(X, 3, seed=0)
    assert model.converged and same_partition(model.labels, truth)
    for j in range(3):
        assert np.allclose(model.centroids[j], X[model.labels == j].mean(axis=0), atol=1e-10)


def test_k1_is_the_mean():
    X, _ = blobs(2)
    model = kmeans_fit(X, 1)
    assert np.allclose(model.centroids[0], X.mean(axis=0), atol=1e-12)
    assert model.inertia == pytest.approx(len(X) * X.var(axis=0).sum(), rel=1e-12)


def test_weights_equal_duplicates():
    X, _ = blobs(3, n=8)
    w = np.arange(1, len(X) + 1) % 3 + 1
    init = X[[0, 9, 20]]
    dup = kmeans_fit(np.repeat(X, w, axis=0), 3, init=init)
    wtd = kmeans_fit(X, 3, init=init, sample_weight=w)
    assert np.allclose(dup.centroids, wtd.centroids, atol=1e-10)
    assert dup.inertia == pytest.approx(wtd.inertia, rel=1e-10)
    assert np.array_equal(np.repeat(wtd.labels, w), dup.labels)


@given(arrays(float, (20, 2), elements=st.floats(-100, 100)), st.integers(1, 5), st.integers(0, 1000))
@settings(max_examples=50, deadline=None)
def test_fixed_point_invariants(X, k, seed):
    model = kmeans_fit(X, k, seed=seed, n_init=1)
    d = ((X[:, None, :] - model.centroids[None]) ** 2).sum(axis=2)
    own = d[np.arange(len(X)), model.labels]
    # every point sits with its nearest centroid; no reassignment at fixed centroids lowers inertia
    assert np.all(own <= d.min(axis=1) + 1e-9 * (1 + d.max()))
    for j in set(model.labels.tolist()):
        assert np.allclose(model.centroids[j], X[model.labels == j].mean(axis=0), atol=1e-10)
    assert model.inertia == pytest.approx(own.sum(), rel=1e-12, abs=1e-12)


@given(arrays(float, (25, 3), elements=st.floats(-50, 50)), st.integers(0, 100))
@settings(max_examples=40, deadline=None)
def test_elbow_inertia_weakly_decreases(X, seed):
    res = elbow(X, range(1, 7), seed=seed)
    assert all(b <= a + 1e-9 * max(1.0, a) for a, b in zip(res.inertias, res.inertias[1:]))


def test_elbow_finds_three_blobs():
    X, _ = blobs(5)
    res = elbow(X, range(1, 7), seed=0)
    assert res.suggested_k == 3 and res.ks == [1, 2, 3, 4, 5, 6]


def test_elbow_short_ranges():
    X, _ = blobs(5)
    assert elbow(X, [1], seed=0).suggested_k == 1
    assert suggest_k([2, 3], [5.0, 1.0]) == 2


def test_seeded_runs_repeat():
    X, _ = blobs(7)
    a, b = kmeans_fit(X, 4, seed=11), kmeans_fit(X, 4, seed=11)
    assert np.array_equal(a.labels, b.labels) and a.inertia == b.inertia


def test_bad_k():
    with pytest.raises(ValueError):
        kmeans_fit(np.zeros((3, 2)), 4)
    with pytest.raises(ValueError):
        kmeans_fit(np.zeros((3, 2)), 0)


def test_duplicate_points_do_not_break_seeding():
    X = np.zeros((6, 2))
    X[3:] = 1.0
    model = kmeans_fit(X, 4, seed=0)
    assert model.inertia == 0.0 and len(set(model.labels.tolist())) >= 2
