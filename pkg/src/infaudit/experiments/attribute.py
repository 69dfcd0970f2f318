"""Attribute inference (exact and approximate) by ranking siblings.

Every challenge masks the same feature set S. All completions of the
portion are scored with a membership scorer and the top-scoring ones are
taken as the reconstruction. When t siblings tie for the top score the
attack is credited 1/t if the truth is among them (exact inference), or the
share of tied siblings within alpha of the truth (approximate inference).

For continuous data the truth is compared in sibling space: its masked
values are snapped to the nearest bin centre, so alpha = 0 gives the exact
game back on every domain.
"""

from __future__ import annotations

import dataclasses
from collections.abc import Sequence

import numpy as np

from infaudit.attacks import MembershipScorer
from infaudit.datasets import LabeledDataset
from infaudit.experiments.metrics import binomial_sigma
from infaudit.experiments.report import ExperimentReport
from infaudit.metricspace import (
    DEFAULT_SIBLING_CAP,
    DomainKind,
    FeatureDomain,
    Metric,
    SiblingSet,
    bin_centers,
    bin_index,
    enumerate_siblings,
    expected_random_guess_distance,
    make_portion,
)
from infaudit.models import Network


@dataclasses.dataclass(frozen=True, eq=False)
class AIOutcome:
    flagged: np.ndarray  # the tied top-scoring sibling vectors
    success: float | None  # 1/t if the truth is flagged, else 0
    approximate: float | None  # share of flagged siblings within alpha of the truth

    @property
    def ties(self) -> int:
        return self.flagged.shape[0]


def _snap(x: np.ndarray, unknown: Sequence[int], bins: int, domain: FeatureDomain) -> np.ndarray:
    if domain.kind is DomainKind.BINARY:
        return x
    out = x.copy()
    cols = list(unknown)
    out[cols] = bin_centers(bins)[bin_index(x[cols], bins)]
    return out


def _sibling_distances(siblings: SiblingSet, rows: np.ndarray, truth: np.ndarray, metric: Metric) -> np.ndarray:
    # siblings agree with the truth outside S
    diff = np.abs(siblings.assignments[rows] - truth[list(siblings.portion.unknown)])
    if metric is Metric.EUCLIDEAN:
        return np.sqrt((diff**2).sum(axis=1))
    return diff.sum(axis=1)


def _score_siblings(model, scorer: MembershipScorer, siblings: SiblingSet, y: int, conf=None):
    if scorer.uses_confidences:
        if conf is None:
            conf = model.predict_proba_completions(
                siblings.portion.known, siblings.portion.unknown, siblings.assignments
            )
        return scorer.ai_from_confidences(conf, np.full(len(siblings), y))
    return scorer.ai_score(siblings.candidates, np.full(len(siblings), y))


def _outcome(scores, siblings, truth, alpha, metric) -> tuple[np.ndarray, float | None, float | None]:
    top = np.flatnonzero(scores == scores.max())
    if truth is None:
        return top, None, None
    dist = _sibling_distances(siblings, top, truth, metric)
    success = float(np.any(dist == 0)) / top.size
    approx = None if alpha is None else float(np.count_nonzero(dist <= alpha)) / top.size
    return top, success, approx


def ai_attack(
    model: Network | None,
    scorer: MembershipScorer,
    portion,
    bins: int = 2,
    y: int | None = None,
    truth=None,
    alpha: float | None = None,
    metric: Metric | str | None = None,
    domain: FeatureDomain | None = None,
    cap: int = DEFAULT_SIBLING_CAP,
) -> AIOutcome:
    """Scores all siblings of `portion` (with true label `y`) and flags the top ones.

    With `truth` given, also returns the tie-normalized exact success weight
    and, with `alpha`, the approximate one.
    """
    if y is None:
        raise ValueError("the true class label of the portion is required")
    domain = domain or FeatureDomain(DomainKind.BINARY if bins == 2 else DomainKind.CONTINUOUS, portion.dimension)
    metric = Metric(metric or domain.default_metric)
    siblings = enumerate_siblings(portion, bins, domain, cap)
    scores = np.asarray(_score_siblings(model, scorer, siblings, int(y)), dtype=float)
    if truth is not None:
        truth = _snap(np.asarray(truth, dtype=float), portion.unknown, bins, domain)
    top, success, approx = _outcome(scores, siblings, truth, alpha, metric)
    return AIOutcome(siblings.candidates[top], success, approx)


@dataclasses.dataclass
class AttributeResult:
    scorer: str
    member_success: np.ndarray  # per-challenge exact success weights
    nonmember_success: np.ndarray
    member_approx: np.ndarray
    nonmember_approx: np.ndarray
    ties: np.ndarray  # tie-set size per challenge, members first
    alpha: float

    @property
    def ai_advantage(self) -> float:
        return float(self.member_success.mean() - self.nonmember_success.mean())

    @property
    def aai_advantage(self) -> float:
        return float(self.member_approx.mean() - self.nonmember_approx.mean())

    def tie_stats(self) -> dict:
        return {
            "mean": float(self.ties.mean()),
            "max": int(self.ties.max()),
            "share_tied": float(np.mean(self.ties > 1)),
        }

    def report(self, kind: str, seed: int, config: dict) -> ExperimentReport:
        approx = kind == "aai"
        n1, n0 = len(self.member_success), len(self.nonmember_success)
        return ExperimentReport(
            kind=kind,
            seed=seed,
            config={"scorer": self.scorer, **config},
            advantage=self.aai_advantage if approx else self.ai_advantage,
            ties=self.tie_stats(),
            trials=n1 + n0,
            metrics={
                "ai_advantage": self.ai_advantage,
                "aai_advantage": self.aai_advantage,
                "alpha": self.alpha,
                "member_rate": float((self.member_approx if approx else self.member_success).mean()),
                "nonmember_rate": float((self.nonmember_approx if approx else self.nonmember_success).mean()),
                "n_member": n1,
                "n_nonmember": n0,
                "sigma": binomial_sigma(n1, n0),
            },
        )


def _challenges(data: LabeledDataset, n: int | None, rng) -> LabeledDataset:
    if n is None or n >= len(data):
        return data
    return data.subset(np.sort(rng.choice(len(data), size=n, replace=False)))


def attribute_inference(
    model: Network,
    scorers: Sequence[MembershipScorer],
    members: LabeledDataset,
    nonmembers: LabeledDataset,
    S: Sequence[int],
    bins: int = 2,
    alpha: float | None = None,
    metric: Metric | str | None = None,
    seed: int = 0,
    n_challenges: int | None = None,
    cap: int = DEFAULT_SIBLING_CAP,
) -> dict[str, AttributeResult]:
    """Runs exact and approximate attribute inference for several scorers.

    Up to `n_challenges` members and as many non-members are drawn (all of
    them when None). Sibling confidences are computed once per challenge and
    shared by every confidence-based scorer. `alpha` defaults to the
    expected distance of a random guess of the masked features.
    """
    domain = members.domain
    metric = Metric(metric or domain.default_metric)
    if alpha is None:
        alpha = expected_random_guess_distance(metric, len(S))
    if alpha < 0:
        raise ValueError("alpha must be non-negative")
    rng = np.random.default_rng(seed)
    sides = (_challenges(members, n_challenges, rng), _challenges(nonmembers, n_challenges, rng))
    exact = {s.name: ([], []) for s in scorers}
    approx = {s.name: ([], []) for s in scorers}
    ties = {s.name: [] for s in scorers}
    reps = None
    for side, data in enumerate(sides):
        for x, y in zip(data.X, data.y):
            portion = make_portion(x, S)
            if reps is None:
                reps = enumerate_siblings(portion, bins, domain, cap).assignments
            siblings = SiblingSet(portion, None, reps)
            truth = _snap(x, portion.unknown, bins, domain)
            conf = None
            if any(s.uses_confidences for s in scorers):
                conf = model.predict_proba_completions(portion.known, portion.unknown, reps)
            for s in scorers:
                scores = np.asarray(_score_siblings(model, s, siblings, int(y), conf), dtype=float)
                top, success, share = _outcome(scores, siblings, truth, alpha, metric)
                exact[s.name][side].append(success)
                approx[s.name][side].append(share)
                ties[s.name].append(top.size)
    return {
        s.name: AttributeResult(
            s.name,
            np.array(exact[s.name][0]),
            np.array(exact[s.name][1]),
            np.array(approx[s.name][0]),
            np.array(approx[s.name][1]),
            np.array(ties[s.name]),
            float(alpha),
        )
        for s in scorers
    }


def ai_advantage(model, scorer, members, nonmembers, S, bins=2, seed=0, n_challenges=None) -> float:
    """Member minus non-member tie-normalized exact reconstruction rate."""
    res = attribute_inference(model, [scorer], members, nonmembers, S, bins, 0.0, seed=seed,
                              n_challenges=n_challenges)
    return res[scorer.name].ai_advantage


def aai_advantage(
    model, scorer, members, nonmembers, S, bins=2, alpha=None, metric=None, seed=0, n_challenges=None
) -> float:
    """Member minus non-member rate of reconstructions within alpha of the truth."""
    res = attribute_inference(model, [scorer], members, nonmembers, S, bins, alpha, metric, seed,
                              n_challenges)
    return res[scorer.name].aai_advantage
