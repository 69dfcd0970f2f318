"""A classifier that leaks membership but not strong membership, and the
reduction that turns an attribute-inference attack into a strong
membership decision rule.

The construction: N binary codewords spaced more than 3r apart, each paired
with one neighbour inside its r-ball. The population is uniform over the 2N
points; a pair shares one random label. The classifier memorises its
training sample and labels every point within r of a training point; all
other queries get class 0. An adversary that says "member" whenever the
classifier is right wins the ordinary game (uncovered non-members are only
right by accident) but has no edge once the non-member is the r-neighbour
of a member, since the whole ball is labelled correctly.
"""

from __future__ import annotations

import dataclasses
import json
from collections.abc import Callable

import numpy as np

from infaudit.datasets import LabeledDataset
from infaudit.experiments.metrics import advantage_from_decisions, binomial_sigma
from infaudit.metricspace import Metric, distances_to_set, make_portion
from infaudit.perturb import hamming_ball_sample

SPREAD_CODE_FORMAT = "infaudit.spreadcode/1"


class CodeSamplingError(RuntimeError):
    pass


@dataclasses.dataclass(frozen=True, eq=False)
class SpreadCode:
    codewords: np.ndarray  # (N, m) binary
    partners: np.ndarray  # (N, m); partners[i] lies within r of codewords[i]
    labels: np.ndarray  # (N,) shared by a codeword and its partner
    m: int
    r: int
    k: int
    metric: Metric = Metric.HAMMING

    @property
    def N(self) -> int:
        return self.codewords.shape[0]

    @property
    def points(self) -> np.ndarray:
        """S = codewords followed by partners; point i and i + N form a pair."""
        return np.vstack([self.codewords, self.partners])

    @property
    def point_labels(self) -> np.ndarray:
        return np.concatenate([self.labels, self.labels])

    def verify(self) -> None:
        """Raises if spacing or the one-neighbour property fails (exhaustive)."""
        S = self.points
        G = S @ S.T
        sq = np.diag(G)
        D = sq[:, None] + sq[None, :] - 2 * G  # Hamming distance on {0,1}
        N = self.N
        code = D[:N, :N] + np.eye(N) * (3 * self.r + 1)
        if N > 1 and code.min() <= 3 * self.r:
            raise CodeSamplingError("two codewords lie within 3r of each other")
        paired = np.diag(D[:N, N:])
        if np.any((paired <= 0) | (paired > self.r)):
            raise CodeSamplingError("some partner is not a distinct point within r of its codeword")
        near = (D <= self.r).sum(axis=1) - 1
        if not np.all(near == 1):
            raise CodeSamplingError("some point does not have exactly one r-neighbour")

    def to_dict(self) -> dict:
        return {
            "format": SPREAD_CODE_FORMAT,
            "m": self.m,
            "r": self.r,
            "k": self.k,
            "metric": self.metric.value,
            "codewords": ["".join(str(int(b)) for b in row) for row in self.codewords],
            "partners": ["".join(str(int(b)) for b in row) for row in self.partners],
            "labels": [int(c) for c in self.labels],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> SpreadCode:
        if d.get("format") != SPREAD_CODE_FORMAT:
            raise ValueError(f"unsupported spread code format {d.get('format')!r}")

        def bits(rows):
            return np.array([[float(ch) for ch in row] for row in rows]).reshape(len(rows), d["m"])

        return cls(bits(d["codewords"]), bits(d["partners"]), np.array(d["labels"], dtype=np.int64),
                   d["m"], d["r"], d["k"], Metric(d["metric"]))


def sample_spread_codewords(
    m: int, N: int, r: int, k: int, metric: Metric | str = Metric.HAMMING, seed: int = 0,
    budget: int | None = None,
) -> SpreadCode:
    """Random greedy code: keep uniform draws that are more than 3r from all kept ones."""
    metric = Metric(metric)
    if metric is not Metric.HAMMING:
        raise ValueError("spread codes are built on the binary cube with the Hamming metric")
    if r < 1 or N < 1 or k < 1:
        raise ValueError("r, N and k must be positive")
    if N >= 2 and 3 * r >= m:
        raise CodeSamplingError(f"no two points of {{0,1}}^{m} are more than {3 * r} apart")
    budget = 100 * N if budget is None else budget
    rng = np.random.default_rng(seed)
    kept = np.empty((N, m))
    count = 0
    for _ in range(budget):
        x = rng.integers(0, 2, size=m).astype(float)
        if count:
            d = np.abs(kept[:count] - x).sum(axis=1)
            if d.min() <= 3 * r:
                continue
        kept[count] = x
        count += 1
        if count == N:
            break
    else:
        if count < N:
            raise CodeSamplingError(f"found {count}/{N} codewords within {budget} draws")
    partners = np.array([hamming_ball_sample(x, r, rng) for x in kept])
    labels = rng.integers(0, k, size=N)
    return SpreadCode(kept, partners, labels, m, r, k, metric)


@dataclasses.dataclass(frozen=True, eq=False)
class BallClassifier:
    X: np.ndarray  # memorised training points
    labels: np.ndarray
    r: float
    metric: Metric = Metric.HAMMING
    fallback: int = 0

    def predict(self, Q) -> np.ndarray:
        Q = np.atleast_2d(np.asarray(Q, dtype=float))
        d, j = distances_to_set(Q, self.X, self.metric)
        return np.where(d <= self.r, self.labels[j], self.fallback)


def build_ball_classifier(code: SpreadCode, n: int, seed: int = 0) -> tuple[BallClassifier, np.ndarray]:
    """Draws n training points i.i.d. from S and memorises them.

    Returns the classifier and the indices into `code.points` it was trained on.
    """
    if n < 1:
        raise ValueError("n must be positive")
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, 2 * code.N, size=n)
    clf = BallClassifier(code.points[idx], code.point_labels[idx], code.r, code.metric)
    return clf, idx


@dataclasses.dataclass(frozen=True)
class SeparationResult:
    mi_advantage: float
    smi_advantage: float
    sigma_mi: float
    sigma_smi: float
    bound: float  # (1/2)(k-1)/k

    def __iter__(self):
        return iter((self.mi_advantage, self.smi_advantage))


def theorem1_experiment(code: SpreadCode, n: int, trials: int, seed: int = 0) -> SeparationResult:
    """Plays both membership games against the ball classifier.

    The adversary answers "member" iff the classifier's label is correct.
    In the strong game the non-member is the pair partner of the member.
    """
    rng = np.random.default_rng(seed)
    clf, train_idx = build_ball_classifier(code, n, int(rng.integers(2**63)))
    S, c = code.points, code.point_labels
    pair = np.concatenate([np.arange(code.N) + code.N, np.arange(code.N)])

    def guess(idx):
        return (clf.predict(S[idx]) == c[idx]).astype(float)

    def play(nonmember_of):
        b = rng.integers(0, 2, size=trials)
        x0 = train_idx[rng.integers(0, n, size=trials)]
        chal = np.where(b == 1, x0, nonmember_of(x0))
        dec = guess(chal)
        n1 = int(b.sum())
        return advantage_from_decisions(dec[b == 1], dec[b == 0]), binomial_sigma(n1, trials - n1)

    mi, s_mi = play(lambda x0: rng.integers(0, 2 * code.N, size=x0.size))
    smi, s_smi = play(lambda x0: pair[x0])
    return SeparationResult(mi, smi, s_mi, s_smi, 0.5 * (code.k - 1) / code.k)


def smi_from_ai_reduction(
    ai_adversary: Callable, model=None, train: LabeledDataset | None = None,
    metric: Metric | str | None = None, seed: int = 0,
) -> Callable:
    """Wraps an attribute-inference adversary as a strong membership decision rule.

    `ai_adversary(portion, y)` must return a full vector. On challenge (x, y)
    one uniformly random index is masked; the rule outputs 1 iff the
    reconstruction equals x on every coordinate. `model`, `train` and
    `metric` are passed through to the adversary's context and not used here.
    """
    rng = np.random.default_rng(seed)

    def decide(x, y) -> int:
        x = np.asarray(x, dtype=float)
        i = int(rng.integers(0, x.size))
        guess = np.asarray(ai_adversary(make_portion(x, [i]), y), dtype=float)
        if guess.shape != x.shape:
            raise ValueError(f"adversary returned shape {guess.shape}, expected {x.shape}")
        return int(np.array_equal(guess, x))

    return decide


def ai_adversary_from_attack(model, scorer, bins: int = 2, domain=None, seed: int = 0) -> Callable:
    """An attribute-inference adversary that returns one top-ranked sibling (ties broken at random)."""
    from infaudit.experiments.attribute import ai_attack

    rng = np.random.default_rng(seed)

    def adversary(portion, y):
        flagged = ai_attack(model, scorer, portion, bins, y=y, domain=domain).flagged
        return flagged[int(rng.integers(0, flagged.shape[0]))]

    return adversary
