"""Black-box membership scorers: Conf, Loss and Shadow.

Every scorer maps (vectors, true labels) to real scores where higher means
"more likely a training member". Model-based scorers work from the target
model's confidence vectors, which lets attribute inference score many
sibling completions without re-running the first layer.
"""

from __future__ import annotations

import dataclasses
import json
from collections.abc import Callable, Sequence
from pathlib import Path

import numpy as np

from infaudit.datasets import LabeledDataset
from infaudit.metricspace import DomainKind
from infaudit.models import MlpConfig, Network, cross_entropy_loss, dumps_checkpoint
from infaudit.models import fit_network, init_network, loads_checkpoint, train_mlp
from infaudit.perturb import flip_bits, perturb_manhattan


class AttackError(ValueError):
    pass


@dataclasses.dataclass(frozen=True)
class MembershipScore:
    score: float
    scorer: str


class MembershipScorer:
    """Base scorer. Subclasses override `from_confidences` or `score`."""

    name = "scorer"
    threshold: float | None = None  # member iff score >= threshold; None = best threshold

    def __init__(self, model: Network | None = None):
        self.model = model

    @property
    def uses_confidences(self) -> bool:
        return type(self).from_confidences is not MembershipScorer.from_confidences

    def from_confidences(self, conf: np.ndarray, y: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def score(self, X, y) -> np.ndarray:
        return self.from_confidences(self.model.predict_proba(X), np.asarray(y))

    def ai_from_confidences(self, conf: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Score used to rank siblings in attribute inference."""
        return self.from_confidences(conf, y)

    def ai_score(self, X, y) -> np.ndarray:
        if self.uses_confidences:
            return self.ai_from_confidences(self.model.predict_proba(X), np.asarray(y))
        return self.score(X, y)


class ConfScorer(MembershipScorer):
    """Highest class confidence; ignores the true label."""

    name = "conf"

    def from_confidences(self, conf, y):
        return conf.max(axis=1)


class LossScorer(MembershipScorer):
    """Negative cross-entropy of the true label.

    The hard decision flags a member when the loss is at most the model's
    mean training loss. For attribute inference the sibling whose loss is
    closest to the training loss wins.
    """

    name = "loss"

    @property
    def threshold(self) -> float:
        return -self.model.train_loss

    def from_confidences(self, conf, y):
        return -cross_entropy_loss(conf, np.broadcast_to(y, conf.shape[:1]))

    def ai_from_confidences(self, conf, y):
        loss = cross_entropy_loss(conf, np.broadcast_to(y, conf.shape[:1]))
        return -np.abs(loss - self.model.train_loss)


class ShadowScorer(MembershipScorer):
    """Membership probability from a shadow-trained attack model."""

    name = "shadow"
    threshold = 0.5

    def __init__(self, attack: ShadowAttackModel, model: Network):
        super().__init__(model)
        if attack.k != model.k:
            raise AttackError(f"attack model built for k={attack.k}, target has k={model.k}")
        self.attack = attack

    def from_confidences(self, conf, y):
        return self.attack.membership_probability(conf, np.broadcast_to(y, conf.shape[:1]))


class FunctionScorer(MembershipScorer):
    """Wraps a plain function (X, y) -> scores, e.g. an oracle."""

    def __init__(self, fn: Callable, name: str = "function", threshold: float | None = None):
        super().__init__(None)
        self.fn = fn
        self.name = name
        self.threshold = threshold

    def score(self, X, y):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.asarray(self.fn(X, np.broadcast_to(np.asarray(y), X.shape[:1])), dtype=float)


def conf_mi_score(model: Network, x) -> MembershipScore:
    return MembershipScore(float(ConfScorer(model).score(np.atleast_2d(x), [0])[0]), "conf")


def loss_mi_score(model: Network, x, true_label: int) -> MembershipScore:
    s = LossScorer(model).score(np.atleast_2d(x), np.array([true_label]))
    return MembershipScore(float(s[0]), "loss")


def loss_mi_decision(model: Network, x, true_label: int) -> int:
    """1 if the loss on (x, label) does not exceed the stored training loss."""
    return int(loss_mi_score(model, x, true_label).score >= -model.train_loss)


def shadow_mi_score(attack: ShadowAttackModel, model: Network, x, true_label: int) -> MembershipScore:
    s = ShadowScorer(attack, model).score(np.atleast_2d(x), np.array([true_label]))
    return MembershipScore(float(s[0]), "shadow")


# ---------------------------------------------------------------- shadow attack


def encode_attack_input(conf: np.ndarray, y: np.ndarray, k: int) -> np.ndarray:
    """Confidences sorted in decreasing order, then the one-hot true label."""
    conf = np.atleast_2d(conf)
    onehot = np.zeros((conf.shape[0], k))
    onehot[np.arange(conf.shape[0]), y] = 1.0
    return np.hstack([-np.sort(-conf, axis=1), onehot])


@dataclasses.dataclass(frozen=True, eq=False)
class ShadowSplit:
    model: Network
    members: LabeledDataset
    nonmembers: LabeledDataset


@dataclasses.dataclass(frozen=True, eq=False)
class AttackRecords:
    features: np.ndarray  # encoded attack inputs
    labels: np.ndarray  # true class of the underlying vector
    membership: np.ndarray  # 1 = in the shadow's training set

    def __len__(self) -> int:
        return self.features.shape[0]

    def concat(self, other: AttackRecords) -> AttackRecords:
        return AttackRecords(
            np.vstack([self.features, other.features]),
            np.concatenate([self.labels, other.labels]),
            np.concatenate([self.membership, other.membership]),
        )


@dataclasses.dataclass(frozen=True, eq=False)
class ShadowAttackModel:
    heads: tuple[Network, ...]  # one shared head, or one per class
    k: int
    n_shadows: int
    per_class: bool = False
    records: AttackRecords | None = None
    shadows: tuple[ShadowSplit, ...] = ()

    def membership_probability(self, conf: np.ndarray, y: np.ndarray) -> np.ndarray:
        y = np.asarray(y, dtype=np.int64)
        feats = encode_attack_input(conf, y, self.k)
        if not self.per_class:
            return self.heads[0].predict_proba(feats)
        out = np.empty(feats.shape[0])
        for c in np.unique(y):
            rows = y == c
            out[rows] = self.heads[c].predict_proba(feats[rows])
        return out

    def save(self, path: str | Path) -> None:
        meta = json.dumps(
            {"k": self.k, "n_shadows": self.n_shadows, "per_class": self.per_class},
            sort_keys=True,
        ).encode()
        Path(path).write_bytes(dumps_checkpoint(self.heads, kind=1, extra=meta))

    @classmethod
    def load(cls, path: str | Path) -> ShadowAttackModel:
        kind, heads, extra = loads_checkpoint(Path(path).read_bytes())
        if kind != 1:
            raise AttackError(f"{path} is not a shadow attack checkpoint")
        meta = json.loads(extra)
        return cls(tuple(heads), meta["k"], meta["n_shadows"], meta["per_class"])


DEFAULT_ATTACK_CFG = MlpConfig(hidden_layers=(64,), epochs=60, batch_size=128, learning_rate=1e-3)


def _stratified_buckets(y: np.ndarray, n_buckets: int, size: int, rng) -> list[np.ndarray]:
    """Deal each class's rows round-robin over the buckets, then trim to `size`."""
    order = []
    for c in np.unique(y):
        order.append(rng.permutation(np.flatnonzero(y == c)))
    dealt = np.concatenate(order)
    buckets = [dealt[b::n_buckets] for b in range(n_buckets)]
    return [np.sort(rng.permutation(b)[:size]) for b in buckets]


def _split_pool(pool: LabeledDataset, n_shadows: int, size: int, rng) -> list[tuple[np.ndarray, np.ndarray]]:
    present = np.unique(pool.y)
    for attempt in range(10):
        if attempt == 0:
            perm = rng.permutation(len(pool))
            buckets = [np.sort(perm[b * size : (b + 1) * size]) for b in range(2 * n_shadows)]
        else:
            buckets = _stratified_buckets(pool.y, 2 * n_shadows, size, rng)
        if all(len(b) == size and np.array_equal(np.unique(pool.y[b]), present) for b in buckets):
            return [(buckets[2 * i], buckets[2 * i + 1]) for i in range(n_shadows)]
    raise AttackError("a class is missing from some shadow split after 10 attempts")


def _records_from_split(split: ShadowSplit, k: int) -> AttackRecords:
    feats, labels, member = [], [], []
    for data, bit in ((split.members, 1), (split.nonmembers, 0)):
        conf = split.model.predict_proba(data.X)
        feats.append(encode_attack_input(conf, data.y, k))
        labels.append(data.y)
        member.append(np.full(len(data), bit))
    return AttackRecords(np.vstack(feats), np.concatenate(labels), np.concatenate(member))


def fit_attack_heads(
    records: AttackRecords, k: int, attack_cfg: MlpConfig, per_class: bool
) -> tuple[Network, ...]:
    """Trains sigmoid-output attack networks on membership records."""
    groups = [np.arange(len(records))] if not per_class else [
        np.flatnonzero(records.labels == c) for c in range(k)
    ]
    heads = []
    for c, rows in enumerate(groups):
        rng = np.random.default_rng(attack_cfg.seed + c)
        sizes = [records.features.shape[1], *attack_cfg.hidden_layers, 1]
        net = init_network(sizes, attack_cfg.activation, rng, output="sigmoid")
        if rows.size:
            net, _ = fit_network(net, records.features[rows], records.membership[rows], attack_cfg, rng)
        heads.append(net)
    return tuple(heads)


def train_shadow_attack(
    shadow_pool: LabeledDataset,
    n_shadows: int,
    target_cfg: MlpConfig,
    attack_cfg: MlpConfig = DEFAULT_ATTACK_CFG,
    seed: int = 0,
    shadow_size: int | None = None,
    per_class: bool = False,
    k: int | None = None,
) -> ShadowAttackModel:
    """Trains `n_shadows` shadow models and an attack model on their outputs.

    Shadow i trains on its own `shadow_size` rows of the pool (seeded with
    seed XOR i) and an equally sized disjoint block is held out; the attack
    model learns to tell the two apart from (sorted confidences, true label).
    """
    k = k or shadow_pool.k
    if n_shadows < 1:
        raise AttackError("need at least one shadow model")
    size = shadow_size or len(shadow_pool) // (2 * n_shadows)
    if size < 1 or 2 * n_shadows * size > len(shadow_pool):
        raise AttackError(
            f"pool of {len(shadow_pool)} rows cannot hold {n_shadows} disjoint in/out splits of {size}"
        )
    rng = np.random.default_rng(seed)
    splits = []
    records = None
    for i, (ins, outs) in enumerate(_split_pool(shadow_pool, n_shadows, size, rng)):
        members = shadow_pool.subset(ins)
        model, _ = train_mlp(members, k, target_cfg.replace(seed=seed ^ i))
        split = ShadowSplit(model, members, shadow_pool.subset(outs))
        splits.append(split)
        rec = _records_from_split(split, k)
        records = rec if records is None else records.concat(rec)
    heads = fit_attack_heads(records, k, attack_cfg, per_class)
    return ShadowAttackModel(heads, k, n_shadows, per_class, records, tuple(splits))


def augment_attack_training(
    attack: ShadowAttackModel,
    attack_cfg: MlpConfig = DEFAULT_ATTACK_CFG,
    per_distance: int = 2,
    max_distance: int = 10,
    seed: int = 0,
    manhattan_step: float = 0.05,
) -> ShadowAttackModel:
    """Retrains the attack model with nearby synthetic non-members added.

    For every shadow member and non-member, `per_distance` neighbours are
    generated at each distance 1..max_distance (Hamming flips on binary
    data, multiples of `manhattan_step` of L1 displacement on continuous
    data), passed through that shadow's model and recorded as non-members.
    Neighbours that coincide with a shadow member are dropped.
    """
    if per_distance == 0 or max_distance == 0:
        return attack
    if not attack.shadows or attack.records is None:
        raise AttackError("augmentation needs the shadow splits kept by train_shadow_attack")
    rng = np.random.default_rng(seed)
    extra = attack.records
    for split in attack.shadows:
        binary = split.members.domain.kind is DomainKind.BINARY
        bases = np.vstack([split.members.X, split.nonmembers.X])
        labels = np.concatenate([split.members.y, split.nonmembers.y])
        member_keys = {row.tobytes() for row in split.members.X}
        synth, synth_y = [], []
        for base, label in zip(bases, labels):
            for d in range(1, max_distance + 1):
                if binary:
                    vecs = flip_bits(base, min(d, base.size), per_distance, rng)
                else:
                    vecs = perturb_manhattan(base, d * manhattan_step, per_distance, rng)
                for v in vecs:
                    if v.tobytes() not in member_keys:
                        synth.append(v)
                        synth_y.append(label)
        if not synth:
            continue
        synth = np.array(synth)
        synth_y = np.array(synth_y, dtype=np.int64)
        conf = split.model.predict_proba(synth)
        extra = extra.concat(
            AttackRecords(encode_attack_input(conf, synth_y, attack.k), synth_y, np.zeros(len(synth_y)))
        )
    heads = fit_attack_heads(extra, attack.k, attack_cfg, attack.per_class)
    return dataclasses.replace(attack, heads=heads, records=extra)


def make_scorer(kind: str, model: Network, attack: ShadowAttackModel | None = None) -> MembershipScorer:
    kind = kind.lower()
    if kind == "conf":
        return ConfScorer(model)
    if kind == "loss":
        return LossScorer(model)
    if kind == "shadow":
        if attack is None:
            raise AttackError("the shadow scorer needs a trained attack model")
        return ShadowScorer(attack, model)
    raise AttackError(f"unknown attack {kind!r}")


ATTACK_NAMES: Sequence[str] = ("conf", "loss", "shadow")
