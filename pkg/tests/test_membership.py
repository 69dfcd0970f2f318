import math

import numpy as np
import pytest

from infaudit.attacks import ConfScorer, FunctionScorer
from infaudit.datasets import LabeledDataset, synth_dataset
from infaudit.experiments.membership import (
    InducedNeighborSampler,
    NeighborSamplingError,
    decision_region_volumes,
    distance_stratified_auc,
    mi_experiment,
    per_class_stratified_auc,
    smi_experiment,
    stratified_auc,
)
from infaudit.experiments.synthesis import synthesize_batch
from infaudit.metricspace import FeatureDomain, Metric
from infaudit.models import MlpConfig, train_mlp

import oracles


def membership_oracle(train):
    rows = {r.tobytes() for r in train.X}
    return FunctionScorer(lambda X, y: np.array([r.tobytes() in rows for r in X], float), "oracle", 0.5)


def test_oracle_scorer_wins_the_mi_game(small_binary):
    train, test, _ = small_binary
    rep = mi_experiment(None, train, test, membership_oracle(train), trials=400, seed=1)
    assert rep.advantage == 1.0 and rep.auc == 1.0
    assert rep.metrics["n_member"] + rep.metrics["n_nonmember"] == 400


def test_constant_scorer_has_no_advantage(small_binary):
    train, test, _ = small_binary
    rep = mi_experiment(None, train, test, FunctionScorer(lambda X, y: np.zeros(len(X)), "zero", 0.5), 300)
    assert rep.advantage == 0.0 and rep.auc == 0.5


def test_mi_is_seeded(binary_model, small_binary):
    net, _ = binary_model
    train, test, _ = small_binary
    a = mi_experiment(net, train, test, ConfScorer(net), 500, seed=3)
    b = mi_experiment(net, train, test, ConfScorer(net), 500, seed=3)
    assert a.to_json() == b.to_json()


def test_smi_at_full_radius_matches_mi(binary_model, small_binary):
    net, _ = binary_model
    train, test, _ = small_binary
    trials = 4000
    mi = mi_experiment(net, train, test, ConfScorer(net), trials, seed=5)
    smi = smi_experiment(net, train, train.m, "hamming", ConfScorer(net), trials=trials, seed=6, population=test)
    sigma = math.hypot(mi.metrics["sigma"], smi.metrics["sigma"])
    assert abs(mi.auc - smi.auc) < 3 * sigma
    assert abs(mi.advantage - smi.advantage) < 3 * sigma + 0.02


def test_smi_neighbours_lie_in_the_ball(small_binary):
    train, _, _ = small_binary
    sampler = InducedNeighborSampler(train, None, Metric.HAMMING)
    rng = np.random.default_rng(0)
    for j in range(30):
        x, y = sampler(train.X[j], int(train.y[j]), 3, rng)
        assert 0 < oracles.dist(x, train.X[j], "hamming") <= 3
        d, nn = oracles.nearest(x, train.X, "hamming")
        assert d > 0 and train.y[nn] == y == train.y[j]


def test_smi_sampler_prefers_population(small_binary):
    train, test, _ = small_binary
    x0 = train.X[0]
    near = test.subset([int(np.argmin(np.abs(test.X - x0).sum(axis=1)))])
    r = float(np.abs(near.X[0] - x0).sum())
    sampler = InducedNeighborSampler(train, near, Metric.HAMMING)
    x, y = sampler(x0, int(train.y[0]), r, np.random.default_rng(0))
    assert np.array_equal(x, near.X[0]) and y == near.y[0]


def test_smi_sampler_failure():
    X = np.array([[0, 0], [1, 0], [0, 1], [1, 1]], dtype=float)
    train = LabeledDataset(X, [0, 0, 0, 0], FeatureDomain("binary", 2))
    sampler = InducedNeighborSampler(train, None, Metric.HAMMING, max_retries=5)
    with pytest.raises(NeighborSamplingError):
        sampler(X[0], 0, 2, np.random.default_rng(0))
    with pytest.raises(ValueError):
        smi_experiment(None, train, 0, "hamming", ConfScorer(None))


def test_stratified_auc_omits_empty_keys():
    out = stratified_auc([1.0, 2.0], [0.0, 3.0, 1.0], [1, 2, 1])
    assert out == {1: oracles.auc_pairs([1, 2], [0, 1]), 2: 0.0}


def test_distance_stratified_auc_with_oracle(small_binary):
    train, _, _ = small_binary
    batch = synthesize_batch(train.X[:10], train.y[:10], train, [1, 2, 3], 2,
                             np.random.default_rng(0), Metric.HAMMING, strict=False)
    cands = LabeledDataset(np.vstack([batch.X, train.X[:3]]), np.concatenate([batch.y, train.y[:3]]),
                           train.domain, train.k)
    out = distance_stratified_auc(train, cands, train, membership_oracle(train))
    assert set(out) == {1, 2, 3} and all(v == 1.0 for v in out.values())


def test_per_class_with_one_class_equals_distance_stratified(small_binary, binary_model):
    net, _ = binary_model
    train, test, _ = small_binary
    only = train.subset(train.y == 0)
    cands = test.subset(test.y == 0)
    scorer = ConfScorer(net)
    per = per_class_stratified_auc(only, cands, only, scorer)
    flat = distance_stratified_auc(only, cands, only, scorer)
    assert per.for_class(0) == flat
    assert per.mean_by_group() == pytest.approx(flat)


def test_per_class_omits_class_without_members(small_binary, binary_model):
    net, _ = binary_model
    train, test, _ = small_binary
    members = train.subset(train.y != 2)
    per = per_class_stratified_auc(members, test, train, ConfScorer(net))
    assert {c for c, _ in per.table} <= {0, 1}


def test_decision_region_volumes_sum_to_one(binary_model):
    net, _ = binary_model
    prof = decision_region_volumes(net, FeatureDomain("binary", 24), n_samples=30_001, seed=2, batch=7000)
    assert prof.total == 1.0
    assert prof.counts.sum() == 30_001
    assert np.all(prof.volumes >= 0)
    with pytest.raises(ValueError):
        decision_region_volumes(net, FeatureDomain("binary", 24), n_samples=0)


def test_imbalance_yields_dominant_region():
    data = synth_dataset("binary", 16, 1200, 3, 0.35, seed=4, imbalance=0.7)
    net, _ = train_mlp(data, 3, MlpConfig(hidden_layers=(16,), epochs=30, seed=0))
    prof = decision_region_volumes(net, data.domain, n_samples=20_000, seed=1)
    assert prof.most_dominant == 0
    assert prof.volumes[0] > prof.volumes[prof.least_dominant]
