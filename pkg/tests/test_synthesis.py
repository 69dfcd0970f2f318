import numpy as np
import pytest

from infaudit.datasets import LabeledDataset
from infaudit.experiments.synthesis import (
    SynthesisError,
    group_key,
    manhattan_groups,
    synthesize_batch,
    synthesize_nonmembers_binary,
    synthesize_nonmembers_continuous,
)
from infaudit.metricspace import FeatureDomain, Metric
from infaudit.perturb import flip_bits, hamming_ball_sample, perturb_manhattan

import oracles


def test_flip_bits_exact_distance():
    rng = np.random.default_rng(0)
    base = rng.integers(0, 2, 20).astype(float)
    out = flip_bits(base, 5, 50, rng)
    assert np.all(np.abs(out - base).sum(axis=1) == 5)
    with pytest.raises(ValueError):
        flip_bits(base, 21, 1, rng)


def test_perturb_manhattan_clipped_and_bounded():
    rng = np.random.default_rng(1)
    base = np.array([0.99, -0.99, 0.0])
    out = perturb_manhattan(base, 0.5, 200, rng)
    assert out.min() >= -1 and out.max() <= 1
    assert np.all(np.abs(out - base).sum(axis=1) <= 0.5 + 1e-12)


def test_hamming_ball_sample_within_radius():
    rng = np.random.default_rng(2)
    base = np.zeros(10)
    ds = [np.abs(hamming_ball_sample(base, 3, rng) - base).sum() for _ in range(500)]
    assert set(ds) <= {1, 2, 3}
    # |sphere(d)| = C(10, d): 10, 45, 120 of 175
    assert np.mean(np.array(ds) == 3) == pytest.approx(120 / 175, abs=0.06)


def test_grouping():
    assert manhattan_groups(0.2).tolist() == [0.05, 0.1, 0.15, 0.2]
    assert len(manhattan_groups(5.0)) == 100
    assert group_key(2.0, "hamming") == 2
    assert group_key(0.05, "manhattan") == 0.05
    assert group_key(0.051, "manhattan") == 0.1
    assert group_key(0.01, "manhattan") == 0.05


@pytest.fixture(scope="module")
def binary_train():
    rng = np.random.default_rng(0)
    X = rng.integers(0, 2, size=(40, 12)).astype(float)
    y = rng.integers(0, 2, size=40)
    return LabeledDataset(X, y, FeatureDomain("binary", 12))


def test_binary_nonmembers_verified_by_exhaustive_scan(binary_train):
    base = binary_train.X[0]
    pairs = synthesize_nonmembers_binary(base, binary_train, [1, 2, 3], 4, seed=0)
    assert len(pairs) == 12
    for x, d in pairs:
        od, j = oracles.nearest(x, binary_train.X, "hamming")
        assert d == od and d > 0
        assert binary_train.y[j] == binary_train.y[0]


def test_continuous_nonmembers_grouping():
    rng = np.random.default_rng(3)
    X = rng.uniform(-1, 1, size=(30, 4))
    train = LabeledDataset(X, rng.integers(0, 2, 30), FeatureDomain("continuous", 4))
    pairs = synthesize_nonmembers_continuous(X[0], train, 0.1, 5, seed=1)
    assert len(pairs) == 10
    for x, d in pairs:
        od, _ = oracles.nearest(x, X, "manhattan")
        assert d == pytest.approx(od, abs=1e-12)
        assert 0 < d <= 0.1 + 1e-12


def test_synthesis_errors(binary_train):
    with pytest.raises(ValueError):
        synthesize_nonmembers_binary(binary_train.X[0], binary_train, [0], 1, seed=0)
    with pytest.raises(ValueError):
        synthesize_nonmembers_binary(binary_train.X[0], binary_train, [13], 1, seed=0)
    with pytest.raises(ValueError):
        synthesize_nonmembers_binary(1 - binary_train.X[0], binary_train, [1], 1, seed=0)


def test_unreachable_target_raises_or_is_reported():
    # every 1-flip neighbour of 00 is a member, so distance 1 is impossible
    X = np.array([[0, 0], [1, 0], [0, 1]], dtype=float)
    train = LabeledDataset(X, [0, 0, 0], FeatureDomain("binary", 2))
    with pytest.raises(SynthesisError):
        synthesize_nonmembers_binary(X[0], train, [1], 1, seed=0)
    batch = synthesize_batch(X[:1], np.array([0]), train, [1, 2], 1, np.random.default_rng(0), strict=False)
    assert batch.unreachable == ((0, 1),)
    assert len(batch) == 1 and batch.distance.tolist() == [1.0]


def test_label_filter_discards_wrong_side(binary_train):
    batch = synthesize_batch(binary_train.X[:5], binary_train.y[:5], binary_train, [2, 4], 3,
                             np.random.default_rng(4), Metric.HAMMING, strict=False)
    _, nearest = zip(*(oracles.nearest(x, binary_train.X, "hamming") for x in batch.X))
    assert np.array_equal(binary_train.y[list(nearest)], batch.y)
