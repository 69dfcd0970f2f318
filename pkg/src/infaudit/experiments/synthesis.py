"""Synthetic non-members at controlled distance from the training set.

Members are perturbed (bit flips for binary data, additive L1 perturbations
for continuous data), then every candidate's distance to the training set is
recomputed. Candidates that collide with a member, or whose nearest training
vector carries a different label than the base member, are discarded.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np

from infaudit.datasets import LabeledDataset
from infaudit.metricspace import DomainKind, Metric, distances_to_set
from infaudit.perturb import flip_bits, perturb_manhattan

MANHATTAN_STEP = 0.05
OVERSAMPLE_LIMIT = 100


class SynthesisError(RuntimeError):
    def __init__(self, target, produced: int, wanted: int):
        super().__init__(
            f"only {produced}/{wanted} valid non-members at distance {target} "
            f"after {OVERSAMPLE_LIMIT}x oversampling"
        )
        self.target = target


@dataclasses.dataclass(frozen=True, eq=False)
class SyntheticBatch:
    X: np.ndarray
    y: np.ndarray  # label of the base member
    distance: np.ndarray  # recomputed distance to the training set
    target: np.ndarray  # requested distance (or Manhattan group upper edge)
    base: np.ndarray  # row index of the base vector in the input bases
    unreachable: tuple = ()  # (base index, target) pairs that ran out of attempts

    def __len__(self) -> int:
        return self.X.shape[0]

    def as_pairs(self) -> list[tuple[np.ndarray, float]]:
        return [(x, float(d)) for x, d in zip(self.X, self.distance)]


def manhattan_groups(max_distance: float, step: float = MANHATTAN_STEP) -> np.ndarray:
    """Upper edges of the Manhattan buckets step, 2*step, ..., max_distance."""
    if step <= 0:
        raise ValueError("step must be positive")
    count = int(math.floor(max_distance / step + 1e-9))
    return np.round(step * np.arange(1, count + 1), 10)


def group_key(d: float, metric: Metric | str, step: float = MANHATTAN_STEP):
    """Hamming distances group by exact value; others by the bucket (g - step, g]."""
    if Metric(metric) is Metric.HAMMING:
        return int(round(d))
    return round(math.ceil(d / step - 1e-9) * step, 10)


def _generate(base, target, count, binary, step, rng):
    if binary:
        return flip_bits(base, int(target), count, rng)
    # spread the displacement over the group (target - step, target]
    out = np.empty((count, base.size))
    for i in range(count):
        out[i] = perturb_manhattan(base, target - step * rng.random(), 1, rng)[0]
    return out


def synthesize_batch(
    bases: np.ndarray,
    base_labels: np.ndarray,
    train: LabeledDataset,
    targets,
    per_target: int,
    rng: np.random.Generator,
    metric: Metric | str | None = None,
    step: float = MANHATTAN_STEP,
    strict: bool = True,
) -> SyntheticBatch:
    """Generates `per_target` filtered non-members per (base, target) pair.

    Candidates are produced in rounds so that each pair uses at most
    100 * per_target attempts. With `strict`, running out raises
    `SynthesisError`; otherwise the pair is listed in `unreachable`.
    """
    binary = train.domain.kind is DomainKind.BINARY
    metric = Metric(metric or train.domain.default_metric)
    targets = list(targets)
    for t in targets:
        if t <= 0:
            raise ValueError("target distance 0 would reproduce a member")
        if binary and t > train.m:
            raise ValueError(f"cannot flip {t} of {train.m} bits")
    budget = OVERSAMPLE_LIMIT * per_target
    slots = [(b, t) for b in range(len(bases)) for t in targets]
    need = {s: per_target for s in slots}
    spent = {s: 0 for s in slots}
    accepted: list[tuple] = []
    mult = 1
    while True:
        pending = [s for s in slots if need[s] > 0 and spent[s] < budget]
        if not pending:
            break
        cand, owner = [], []
        for s in pending:
            count = min(need[s] * mult, budget - spent[s])
            spent[s] += count
            cand.append(_generate(bases[s[0]], s[1], count, binary, step, rng))
            owner.extend([s] * count)
        cand = np.vstack(cand)
        dist, nearest = distances_to_set(cand, train.X, metric)
        for x, d, j, s in zip(cand, dist, nearest, owner):
            if need[s] == 0 or d <= 0 or train.y[j] != base_labels[s[0]]:
                continue
            accepted.append((x, base_labels[s[0]], d, s[1], s[0]))
            need[s] -= 1
        mult = min(mult * 2, 64)
    unreachable = tuple(s for s in slots if need[s] > 0)
    if strict and unreachable:
        b, t = unreachable[0]
        raise SynthesisError(t, per_target - need[(b, t)], per_target)
    if not accepted:
        return SyntheticBatch(np.empty((0, train.m)), np.empty(0, np.int64), np.empty(0),
                              np.empty(0), np.empty(0, np.int64), unreachable)
    X, y, d, t, b = zip(*accepted)
    return SyntheticBatch(np.array(X), np.array(y, dtype=np.int64), np.array(d), np.array(t),
                          np.array(b, dtype=np.int64), unreachable)


def _base_label(base: np.ndarray, train: LabeledDataset) -> int:
    d, j = distances_to_set(base[None, :], train.X, train.domain.default_metric)
    if d[0] != 0:
        raise ValueError("the base vector must be a member of the training set")
    return int(train.y[j[0]])


def synthesize_nonmembers_binary(
    base, train: LabeledDataset, distances, per_distance: int, seed: int
) -> list[tuple[np.ndarray, float]]:
    """Bit-flip non-members around one training vector.

    Returns (vector, recomputed distance) pairs, `per_distance` per requested
    Hamming distance.
    """
    base = np.asarray(base, dtype=float)
    label = _base_label(base, train)
    batch = synthesize_batch(
        base[None, :], np.array([label]), train, distances, per_distance,
        np.random.default_rng(seed), Metric.HAMMING,
    )
    return batch.as_pairs()


def synthesize_nonmembers_continuous(
    base,
    train: LabeledDataset,
    max_distance: float,
    per_group: int,
    seed: int,
    step: float = MANHATTAN_STEP,
    metric: Metric | str = Metric.MANHATTAN,
) -> list[tuple[np.ndarray, float]]:
    """Perturbation non-members around one training vector, `per_group` per Manhattan bucket."""
    base = np.asarray(base, dtype=float)
    label = _base_label(base, train)
    batch = synthesize_batch(
        base[None, :], np.array([label]), train, manhattan_groups(max_distance, step),
        per_group, np.random.default_rng(seed), metric, step,
    )
    return batch.as_pairs()
