import numpy as np
import pytest

from infaudit.attacks import (
    AttackError,
    ConfScorer,
    FunctionScorer,
    LossScorer,
    ShadowAttackModel,
    ShadowScorer,
    augment_attack_training,
    conf_mi_score,
    encode_attack_input,
    loss_mi_decision,
    loss_mi_score,
    make_scorer,
    shadow_mi_score,
    train_shadow_attack,
)
from infaudit.experiments.metrics import auc
from infaudit.models import MlpConfig, cross_entropy_loss

SMALL = MlpConfig(hidden_layers=(32,), epochs=40, seed=0)
ATTACK = MlpConfig(hidden_layers=(16,), epochs=30, batch_size=64, seed=1)


@pytest.fixture(scope="module")
def shadow(small_binary):
    _, _, pool = small_binary
    return train_shadow_attack(pool, 1, SMALL, ATTACK, seed=2, k=3)


def test_conf_and_loss_scores(binary_model, small_binary):
    net, _ = binary_model
    train, _, _ = small_binary
    x, y = train.X[0], int(train.y[0])
    p = net.predict_proba(x[None, :])[0]
    assert conf_mi_score(net, x).score == pytest.approx(p.max())
    assert loss_mi_score(net, x, y).score == pytest.approx(-cross_entropy_loss(p, y))
    assert loss_mi_decision(net, x, y) == int(cross_entropy_loss(p, y) <= net.train_loss)


def test_loss_scorer_threshold_is_training_loss(binary_model):
    net, _ = binary_model
    s = LossScorer(net)
    assert s.threshold == -net.train_loss
    assert ConfScorer(net).threshold is None


def test_loss_ai_prefers_loss_closest_to_training_loss(binary_model):
    net, _ = binary_model
    conf = np.array([[0.9, 0.05, 0.05], [0.5, 0.25, 0.25], [0.99, 0.005, 0.005]])
    target = net.train_loss
    losses = -np.log(conf[:, 0])
    s = LossScorer(net).ai_from_confidences(conf, np.zeros(3, dtype=int))
    assert int(np.argmax(s)) == int(np.argmin(np.abs(losses - target)))


def test_encode_attack_input():
    out = encode_attack_input(np.array([[0.2, 0.7, 0.1]]), np.array([2]), 3)
    assert out.tolist() == [[0.7, 0.2, 0.1, 0.0, 0.0, 1.0]]


def test_shadow_attack_separates_overfit_members(shadow, binary_model, small_binary):
    net, _ = binary_model
    train, test, _ = small_binary
    s = ShadowScorer(shadow, net)
    assert s.threshold == 0.5
    pos, neg = s.score(train.X, train.y), s.score(test.X, test.y)
    assert np.all((pos >= 0) & (pos <= 1))
    assert auc(pos, neg) > 0.5
    one = shadow_mi_score(shadow, net, train.X[0], int(train.y[0]))
    assert one.score == pytest.approx(pos[0])


def test_shadow_splits_are_disjoint_and_cover_classes(shadow, small_binary):
    _, _, pool = small_binary
    split = shadow.shadows[0]
    a = {r.tobytes() for r in split.members.X}
    b = {r.tobytes() for r in split.nonmembers.X}
    assert len(split.members) == len(split.nonmembers) == len(pool) // 2
    assert set(np.unique(split.members.y)) == set(np.unique(pool.y))
    assert len(a & b) <= len(pool) - len({r.tobytes() for r in pool.X})


def test_shadow_errors(small_binary, binary_model):
    _, _, pool = small_binary
    with pytest.raises(AttackError):
        train_shadow_attack(pool, 0, SMALL)
    with pytest.raises(AttackError):
        train_shadow_attack(pool, 1, SMALL, shadow_size=len(pool))
    net, _ = binary_model
    with pytest.raises(AttackError):
        make_scorer("shadow", net)
    with pytest.raises(AttackError):
        make_scorer("nope", net)


def test_shadow_k_mismatch(shadow, small_continuous, continuous_model):
    bad = ShadowAttackModel(shadow.heads, 5, 1)
    net, _ = continuous_model
    with pytest.raises(AttackError):
        ShadowScorer(bad, net)


def test_shadow_save_load(tmp_path, shadow, binary_model, small_binary):
    net, _ = binary_model
    train, _, _ = small_binary
    shadow.save(tmp_path / "a.ckpt")
    back = ShadowAttackModel.load(tmp_path / "a.ckpt")
    assert np.array_equal(ShadowScorer(back, net).score(train.X, train.y),
                          ShadowScorer(shadow, net).score(train.X, train.y))


def test_augmentation(shadow):
    assert augment_attack_training(shadow, ATTACK, per_distance=0) is shadow
    aug = augment_attack_training(shadow, ATTACK, per_distance=1, max_distance=2, seed=0)
    assert len(aug.records) > len(shadow.records)
    added = aug.records.membership[len(shadow.records):]
    assert np.all(added == 0)


def test_per_class_heads(small_binary):
    _, _, pool = small_binary
    att = train_shadow_attack(pool, 1, SMALL, ATTACK, seed=2, per_class=True, k=3)
    assert len(att.heads) == 3


def test_function_scorer():
    s = FunctionScorer(lambda X, y: X.sum(axis=1), "sum", threshold=1.0)
    assert s.score([[1, 0], [1, 1]], [0, 0]).tolist() == [1.0, 2.0]
    assert not s.uses_confidences
