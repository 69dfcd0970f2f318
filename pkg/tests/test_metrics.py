import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from infaudit.experiments.metrics import (
    advantage_at_threshold,
    advantage_from_decisions,
    auc,
    auc_brute_force,
    best_threshold,
    binomial_sigma,
    roc_points,
)

import oracles

scores = st.lists(st.integers(-5, 5).map(float) | st.floats(-3, 3), min_size=1, max_size=40)


@settings(max_examples=150, deadline=None)
@given(scores, scores)
def test_auc_equals_pair_counting(pos, neg):
    assert auc(pos, neg) == oracles.auc_pairs(pos, neg)
    assert auc_brute_force(pos, neg) == oracles.auc_pairs(pos, neg)


@settings(max_examples=150, deadline=None)
@given(scores, scores)
def test_auc_antisymmetry_is_exact(pos, neg):
    assert auc(pos, neg) + auc(neg, pos) == 1.0


def test_auc_examples():
    assert auc([1, 2], [0, 0]) == 1.0
    assert auc([0, 0], [1, 2]) == 0.0
    assert auc([1, 1], [1, 1]) == 0.5
    with pytest.raises(ValueError):
        auc([], [1])


def test_advantage_examples():
    assert advantage_from_decisions([1, 1, 0, 1], [0, 1, 0, 0]) == 0.5
    assert advantage_at_threshold([0.9, 0.2], [0.1, 0.6], 0.5) == 0.0
    with pytest.raises(ValueError):
        advantage_from_decisions([2], [0])


@settings(max_examples=100, deadline=None)
@given(scores, scores)
def test_best_threshold_dominates_every_fixed_threshold(pos, neg):
    t, best = best_threshold(pos, neg)
    assert -1.0 <= best <= 1.0
    for cut in set(pos) | set(neg):
        assert advantage_at_threshold(pos, neg, cut) <= best + 1e-12
    if math.isfinite(t):
        assert advantage_at_threshold(pos, neg, t) == pytest.approx(best)


def test_roc_points_endpoints():
    t, tpr, fpr = roc_points([3, 2], [1, 2])
    assert t.tolist() == [3, 2, 1]
    assert tpr.tolist() == [0.5, 1.0, 1.0]
    assert fpr.tolist() == [0.0, 0.5, 1.0]


def test_advantage_bounded_by_auc_relation():
    rng = np.random.default_rng(0)
    for shift in (0.0, 0.3, 1.0):
        pos = rng.normal(shift, 1, 2000)
        neg = rng.normal(0, 1, 2000)
        a = auc(pos, neg)
        for cut in (-1.0, 0.0, 0.5, 1.0):
            assert advantage_at_threshold(pos, neg, cut) <= 2 * (a - 0.5) + 0.05


def test_single_step_roc_makes_relation_tight():
    # a two-valued scorer has a one-kink ROC curve: advantage = 2 (AUC - 1/2)
    pos = [1] * 70 + [0] * 30
    neg = [1] * 20 + [0] * 80
    assert advantage_at_threshold(pos, neg, 1) == pytest.approx(2 * (auc(pos, neg) - 0.5))


def test_binomial_sigma():
    assert binomial_sigma(10000, 10000) == pytest.approx(math.sqrt(0.5 / 10000))
