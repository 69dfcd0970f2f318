import itertools

import numpy as np
import pytest

from infaudit.datasets import LabeledDataset
from infaudit.experiments.kmeans import kmeans_labels, kmeans_objective
from infaudit.experiments.mrmr import mrmr_select, mutual_information
from infaudit.metricspace import FeatureDomain

import oracles


def blobs(seed=0):
    rng = np.random.default_rng(seed)
    X = np.vstack([rng.normal(-4, 0.5, (30, 2)), rng.normal(4, 0.5, (30, 2))])
    truth = np.repeat([0, 1], 30)
    return X, truth


def test_two_blobs_recovered_up_to_permutation():
    X, truth = blobs()
    labels = kmeans_labels(X, 2, seed=3)
    assert any(np.array_equal(labels, np.array(p)[truth]) for p in itertools.permutations(range(2)))


def test_kmeans_trivial_cases():
    X, _ = blobs()
    assert kmeans_labels(X, 1).tolist() == [0] * len(X)
    with pytest.raises(ValueError):
        kmeans_labels(X[:3], 4)


def test_kmeans_iters_zero_is_initial_assignment():
    X, _ = blobs(1)
    rng = np.random.default_rng(7)
    centers = X[rng.choice(len(X), size=3, replace=False)]
    expected = np.argmin(((X[:, None, :] - centers[None]) ** 2).sum(axis=2), axis=1)
    assert kmeans_labels(X, 3, iters=0, seed=7).tolist() == expected.tolist()


def test_kmeans_objective_non_increasing():
    rng = np.random.default_rng(2)
    X = rng.normal(size=(200, 3))
    prev = np.inf
    for it in range(6):
        labels, centers = kmeans_labels(X, 5, iters=it, seed=1, return_centers=True)
        obj = kmeans_objective(X, labels, centers)
        assert obj <= prev + 1e-9
        prev = obj


def binary_data(X, y):
    return LabeledDataset(np.asarray(X, float), y, FeatureDomain("binary", np.asarray(X).shape[1]))


def test_mutual_information_matches_oracle():
    rng = np.random.default_rng(0)
    a, b = rng.integers(0, 3, 100), rng.integers(0, 2, 100)
    assert mutual_information(a, b) == pytest.approx(oracles.entropy_mi(a.tolist(), b.tolist()))


def test_mrmr_label_copy_is_first():
    rng = np.random.default_rng(0)
    X = rng.integers(0, 2, size=(200, 8))
    y = X[:, 3].copy()
    assert mrmr_select(binary_data(X, y), 3)[0] == 3


def test_mrmr_single_feature_is_max_relevance():
    rng = np.random.default_rng(1)
    X = rng.integers(0, 2, size=(200, 6))
    y = (X[:, 2] | (rng.random(200) < 0.1)).astype(int)
    rel = [oracles.entropy_mi(X[:, j].tolist(), y.tolist()) for j in range(6)]
    assert mrmr_select(binary_data(X, y), 1) == [int(np.argmax(rel))]


def test_mrmr_defers_duplicate():
    rng = np.random.default_rng(2)
    base = rng.integers(0, 2, size=(300, 5))
    X = np.hstack([base, base[:, :1]])  # column 5 duplicates column 0
    y = (base[:, 0] ^ (rng.random(300) < 0.1)) | (base[:, 1] & (rng.random(300) < 0.5))
    order = mrmr_select(binary_data(X, y.astype(int)), 3)
    assert order[0] in (0, 5)
    assert order[1] not in (0, 5)


def test_mrmr_constant_feature_and_bounds():
    X = np.zeros((20, 3))
    X[:10, 1] = 1
    y = (X[:, 1] > 0).astype(int)
    assert mrmr_select(binary_data(X, y), 2)[0] == 1
    with pytest.raises(ValueError):
        mrmr_select(binary_data(X, y), 3)


def test_mrmr_continuous_binning():
    rng = np.random.default_rng(3)
    X = rng.uniform(-1, 1, size=(300, 4))
    y = (X[:, 2] > 0).astype(int)
    d = LabeledDataset(X, y, FeatureDomain("continuous", 4))
    assert mrmr_select(d, 2, bins=10)[0] == 2
