"""Membership inference experiments and their distance/class breakdowns."""

from __future__ import annotations

import dataclasses
import math

import numpy as np

from infaudit.attacks import MembershipScorer
from infaudit.datasets import LabeledDataset
from infaudit.experiments.metrics import auc, best_threshold, advantage_at_threshold, binomial_sigma
from infaudit.experiments.report import ExperimentReport
from infaudit.experiments.synthesis import MANHATTAN_STEP, group_key
from infaudit.metricspace import DomainKind, FeatureDomain, Metric, distances_to_set
from infaudit.models import Network
from infaudit.perturb import flip_bits, perturb_manhattan


class NeighborSamplingError(RuntimeError):
    pass


def _advantage(scorer: MembershipScorer, pos: np.ndarray, neg: np.ndarray) -> tuple[float, float]:
    if scorer.threshold is None:
        threshold, adv = best_threshold(pos, neg)
        return adv, threshold
    return advantage_at_threshold(pos, neg, scorer.threshold), scorer.threshold


def _finish(kind, scorer, pos, neg, seed, config, trials) -> ExperimentReport:
    if len(pos) == 0 or len(neg) == 0:
        raise ValueError("the trials produced no members or no non-members; raise `trials`")
    adv, threshold = _advantage(scorer, pos, neg)
    return ExperimentReport(
        kind=kind,
        seed=seed,
        config={"scorer": scorer.name, **config},
        advantage=adv,
        auc=auc(pos, neg),
        trials=trials,
        metrics={
            "n_member": len(pos),
            "n_nonmember": len(neg),
            "sigma": binomial_sigma(len(pos), len(neg)),
            "threshold": threshold if math.isfinite(threshold) else None,
        },
    )


def mi_experiment(
    model: Network | None,
    train: LabeledDataset,
    population: LabeledDataset,
    scorer: MembershipScorer,
    trials: int = 2000,
    seed: int = 0,
) -> ExperimentReport:
    """Membership game: each trial flips a fair coin and presents a random
    training vector (b=1) or a random population vector (b=0).

    The advantage uses the scorer's own decision threshold, or the best
    threshold over the observed scores when it has none.
    """
    if len(train) == 0 or len(population) == 0:
        raise ValueError("train and population must be non-empty")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    b = rng.integers(0, 2, size=trials)
    n1 = int(b.sum())
    mi = rng.integers(0, len(train), size=n1)
    ni = rng.integers(0, len(population), size=trials - n1)
    pos = scorer.score(train.X[mi], train.y[mi]) if n1 else np.empty(0)
    neg = scorer.score(population.X[ni], population.y[ni]) if trials - n1 else np.empty(0)
    return _finish("mi", scorer, pos, neg, seed, {}, trials)


@dataclasses.dataclass
class InducedNeighborSampler:
    """Draws a non-member from the r-ball around a member.

    Population vectors inside the ball are used first (uniformly), which is
    the empirical version of the distribution induced on the ball; at a
    radius covering the whole domain this is exactly the population. When the
    ball holds none, the perturbation generator is used instead: a random
    distance in (0, r], then flips/perturbations, discarding members and
    vectors whose nearest training vector has another label.
    """

    train: LabeledDataset
    population: LabeledDataset | None
    metric: Metric
    max_retries: int = 100

    def __call__(self, x0: np.ndarray, y0: int, r: float, rng: np.random.Generator):
        if self.population is not None and len(self.population):
            d, _ = distances_to_set(self.population.X, x0[None, :], self.metric)
            inside = np.flatnonzero((d <= r) & (d > 0))
            if inside.size:
                j = int(rng.choice(inside))
                return self.population.X[j], int(self.population.y[j])
        binary = self.train.domain.kind is DomainKind.BINARY
        for _ in range(self.max_retries):
            if binary:
                dmax = min(int(math.floor(r)), self.train.m)
                if dmax < 1:
                    raise NeighborSamplingError(f"no binary neighbour within r={r}")
                x = flip_bits(x0, int(rng.integers(1, dmax + 1)), 1, rng)[0]
            else:
                x = perturb_manhattan(x0, r * (1.0 - rng.random()), 1, rng)[0]
                if self.metric is not Metric.MANHATTAN:
                    diff = np.abs(x - x0)
                    if np.sqrt((diff**2).sum()) > r:
                        continue
            dist, j = distances_to_set(x[None, :], self.train.X, self.metric)
            if dist[0] > 0 and self.train.y[j[0]] == y0:
                return x, y0
        raise NeighborSamplingError(f"no valid r-neighbour after {self.max_retries} retries")


def smi_experiment(
    model: Network | None,
    train: LabeledDataset,
    r: float,
    metric: Metric | str,
    scorer: MembershipScorer,
    neighbor_sampler=None,
    trials: int = 2000,
    seed: int = 0,
    population: LabeledDataset | None = None,
) -> ExperimentReport:
    """Strong membership game: a random member x0 is shown as is (b=1) or
    replaced by an r-neighbour of it (b=0)."""
    if r <= 0:
        raise ValueError("r must be positive")
    metric = Metric(metric)
    sampler = neighbor_sampler or InducedNeighborSampler(train, population, metric)
    rng = np.random.default_rng(seed)
    b = rng.integers(0, 2, size=trials)
    x0_idx = rng.integers(0, len(train), size=trials)
    mem = x0_idx[b == 1]
    nonmem_X, nonmem_y = [], []
    for j in x0_idx[b == 0]:
        x, y = sampler(train.X[j], int(train.y[j]), r, rng)
        nonmem_X.append(x)
        nonmem_y.append(y)
    pos = scorer.score(train.X[mem], train.y[mem]) if mem.size else np.empty(0)
    neg = scorer.score(np.array(nonmem_X), np.array(nonmem_y)) if nonmem_X else np.empty(0)
    return _finish("smi", scorer, pos, neg, seed, {"r": r, "metric": metric.value}, trials)


def stratified_auc(member_scores, nonmember_scores, keys) -> dict:
    """AUC of all members against each key's non-members; empty keys omitted."""
    keys = np.asarray(keys, dtype=object)
    neg = np.asarray(nonmember_scores, dtype=float)
    out = {}
    for key in sorted(set(keys.tolist())):
        out[key] = auc(member_scores, neg[keys == key])
    return out


def distance_stratified_auc(
    members: LabeledDataset,
    candidates: LabeledDataset,
    train: LabeledDataset,
    scorer: MembershipScorer,
    metric: Metric | str | None = None,
    step: float = MANHATTAN_STEP,
    distances: np.ndarray | None = None,
) -> dict:
    """AUC per distance group, with `members` as the positive class.

    Candidates at distance 0 (training vectors) are left out. Pass
    precomputed `distances` to skip the nearest-neighbour scan.
    """
    metric = Metric(metric or train.domain.default_metric)
    if distances is None:
        distances, _ = distances_to_set(candidates.X, train.X, metric)
    keep = np.asarray(distances) > 0
    pos = scorer.score(members.X, members.y)
    neg = scorer.score(candidates.X[keep], candidates.y[keep])
    keys = [group_key(d, metric, step) for d in np.asarray(distances)[keep]]
    return stratified_auc(pos, neg, keys)


@dataclasses.dataclass
class DecisionRegionProfile:
    volumes: np.ndarray  # fraction of samples assigned to each class
    counts: np.ndarray
    n_samples: int

    @property
    def total(self) -> float:
        return math.fsum(self.volumes)

    @property
    def most_dominant(self) -> int:
        return int(np.argmax(self.counts))

    @property
    def least_dominant(self) -> int:
        return int(np.argmin(self.counts))


def decision_region_volumes(
    model, domain: FeatureDomain, n_samples: int = 1_000_000, seed: int = 0, batch: int = 100_000
) -> DecisionRegionProfile:
    """Fractional volume of each class's decision region under uniform sampling."""
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    rng = np.random.default_rng(seed)
    k = model.k
    counts = np.zeros(k, dtype=np.int64)
    for start in range(0, n_samples, batch):
        size = min(batch, n_samples - start)
        if domain.kind is DomainKind.BINARY:
            X = rng.integers(0, 2, size=(size, domain.dimension)).astype(float)
        else:
            X = rng.uniform(-1.0, 1.0, size=(size, domain.dimension))
        counts += np.bincount(model.predict(X), minlength=k)
    volumes = counts / n_samples
    # fold rounding slack into the largest region so the volumes sum to one
    top = int(np.argmax(counts))
    volumes[top] = 1.0 - math.fsum(np.delete(volumes, top))
    return DecisionRegionProfile(volumes, counts, n_samples)


@dataclasses.dataclass
class PerClassAUC:
    table: dict  # (class, group) -> AUC
    most_dominant: int | None = None
    least_dominant: int | None = None

    def for_class(self, c: int) -> dict:
        return {g: v for (cls, g), v in self.table.items() if cls == c}

    def mean_by_group(self) -> dict:
        groups: dict = {}
        for (_, g), v in self.table.items():
            groups.setdefault(g, []).append(v)
        return {g: float(np.mean(v)) for g, v in sorted(groups.items())}


def per_class_stratified_auc(
    members: LabeledDataset,
    candidates: LabeledDataset,
    train: LabeledDataset,
    scorer: MembershipScorer,
    metric: Metric | str | None = None,
    step: float = MANHATTAN_STEP,
    regions: DecisionRegionProfile | None = None,
) -> PerClassAUC:
    """AUC per (class, distance group).

    A candidate's class is the label of its nearest training vector; it is
    compared with the members of that same class.
    """
    metric = Metric(metric or train.domain.default_metric)
    dist, nearest = distances_to_set(candidates.X, train.X, metric)
    keep = dist > 0
    cls = train.y[nearest][keep]
    keys = np.array([group_key(d, metric, step) for d in dist[keep]], dtype=object)
    pos_all = scorer.score(members.X, members.y)
    neg_all = scorer.score(candidates.X[keep], candidates.y[keep])
    table = {}
    for c in sorted(set(cls.tolist())):
        pos = pos_all[members.y == c]
        if pos.size == 0:
            continue
        sel = cls == c
        for g, v in stratified_auc(pos, neg_all[sel], keys[sel]).items():
            table[(c, g)] = v
    return PerClassAUC(
        table,
        regions.most_dominant if regions is not None else None,
        regions.least_dominant if regions is not None else None,
    )
