import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from infaudit.metricspace import (
    MASK,
    DomainError,
    DomainKind,
    FeatureDomain,
    Metric,
    SiblingCapError,
    all_binary_vectors,
    bin_centers,
    bin_index,
    check_metric,
    distance,
    distance_to_set,
    distances_to_set,
    enumerate_siblings,
    expected_random_guess_distance,
    make_portion,
    radius_for_unknowns,
)

import oracles

BIN = FeatureDomain(DomainKind.BINARY, 5)
CONT = FeatureDomain(DomainKind.CONTINUOUS, 3)


def test_distance_examples():
    assert distance([0, 1, 1, 0], [1, 1, 0, 0], Metric.HAMMING) == 2
    assert distance([0.5, -0.5], [-0.5, 0.5], Metric.MANHATTAN) == 2.0
    assert distance([0.0, 0.0], [0.6, 0.8], Metric.EUCLIDEAN) == pytest.approx(1.0)


def test_distance_identity_and_errors():
    x = np.array([1.0, 0.0, 1.0, 1.0, 0.0])
    assert distance(x, x, "hamming") == 0
    with pytest.raises(DomainError):
        distance([0, 1], [0, 1, 1], "hamming")
    with pytest.raises(DomainError):
        distance([0.2, 0.5], [0.0, 1.0], "hamming")
    with pytest.raises(DomainError):
        check_metric(BIN, Metric.MANHATTAN)
    with pytest.raises(DomainError):
        check_metric(CONT, Metric.HAMMING)
    with pytest.raises(DomainError):
        distance([0.0, 2.0, 0.0], [0.0, 0.0, 0.0], "manhattan", domain=CONT)


def test_domain_diameter():
    assert BIN.diameter(Metric.HAMMING) == 5
    assert CONT.diameter(Metric.MANHATTAN) == 6
    assert CONT.diameter(Metric.EUCLIDEAN) == pytest.approx(math.sqrt(12))


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 8), st.integers(1, 30), st.integers(0, 10_000), st.sampled_from(list(Metric)))
def test_distances_to_set_matches_exhaustive_scan(m, n, seed, metric):
    rng = np.random.default_rng(seed)
    if metric is Metric.HAMMING:
        X = rng.integers(0, 2, size=(n, m)).astype(float)
        Q = rng.integers(0, 2, size=(5, m)).astype(float)
    else:
        X = rng.uniform(-1, 1, size=(n, m))
        Q = np.vstack([rng.uniform(-1, 1, size=(4, m)), X[:1]])
    d, j = distances_to_set(Q, X, metric)
    for q, dq, jq in zip(Q, d, j):
        od, oj = oracles.nearest(q, X, metric.value)
        assert dq == pytest.approx(od, abs=1e-12)
        assert oracles.dist(q, X[jq], metric.value) == pytest.approx(od, abs=1e-12)


def test_distance_to_set_member_is_zero():
    X = all_binary_vectors(4)
    d, j = distance_to_set(X[7], X, "hamming")
    assert (d, j) == (0.0, 7)
    with pytest.raises(DomainError):
        distance_to_set(X[0], np.empty((0, 4)), "hamming")


def test_make_portion_and_errors():
    p = make_portion([1, 0, 1, 1], {1, 3})
    assert p.unknown == (1, 3)
    assert p.values == (1.0, MASK, 1.0, MASK)
    assert p.known.tolist() == [1.0, 0.0, 1.0, 0.0]
    with pytest.raises(DomainError):
        make_portion([1, 0, 1], [])
    with pytest.raises(DomainError):
        make_portion([1, 0, 1], [0, 1, 2])
    with pytest.raises(DomainError):
        make_portion([1, 0, 1], [3])


def test_enumerate_binary_siblings_matches_itertools():
    x = [1.0, 0.0, 1.0, 1.0, 0.0]
    p = make_portion(x, [0, 2, 4])
    sib = enumerate_siblings(p, 2, BIN)
    assert len(sib) == 8
    got = [tuple(r) for r in sib.candidates]
    assert got == oracles.siblings(x, [0, 2, 4], (0.0, 1.0))
    assert tuple(x) in got


def test_enumerate_continuous_siblings():
    p = make_portion([0.1, -0.3, 0.9], [1])
    sib = enumerate_siblings(p, 4, CONT)
    assert sib.assignments[:, 0].tolist() == [-0.75, -0.25, 0.25, 0.75]
    assert np.all(sib.candidates[:, [0, 2]] == [0.1, 0.9])


def test_sibling_cap_and_bin_range():
    p = make_portion(np.zeros(30), range(21))
    with pytest.raises(SiblingCapError):
        enumerate_siblings(p, 2, FeatureDomain("binary", 30))
    with pytest.raises(DomainError):
        enumerate_siblings(make_portion([0.0, 0.0], [0]), 11, FeatureDomain("continuous", 2))
    with pytest.raises(DomainError):
        enumerate_siblings(make_portion([0.0, 0.0], [0]), 3, FeatureDomain("binary", 2))


def test_bins():
    assert bin_centers(2).tolist() == [-0.5, 0.5]
    assert bin_index([-1.0, -0.01, 0.0, 1.0], 2).tolist() == [0, 0, 1, 1]


def test_radius_for_unknowns_examples():
    assert radius_for_unknowns("hamming", 3) == 3
    assert radius_for_unknowns("manhattan", 3) == 6
    assert radius_for_unknowns("euclidean", 1) == 2
    assert radius_for_unknowns("euclidean", 4) == pytest.approx(4.0)
    with pytest.raises(DomainError):
        radius_for_unknowns("hamming", 0)


def test_random_guess_distance_closed_forms():
    assert expected_random_guess_distance("hamming", 15) == 7.5
    assert expected_random_guess_distance("manhattan", 5) == pytest.approx(10 / 3)
    with pytest.raises(DomainError):
        expected_random_guess_distance("euclidean", 3)


def test_conserving_sandwich():
    rng = np.random.default_rng(0)
    for _ in range(200):
        x, y = rng.uniform(-1, 1, size=(2, 7))
        dinf = np.abs(x - y).max()
        for metric in (Metric.EUCLIDEAN, Metric.MANHATTAN):
            d = distance(x, y, metric)
            assert dinf - 1e-12 <= d <= distance(x, y, Metric.MANHATTAN) + 1e-12
