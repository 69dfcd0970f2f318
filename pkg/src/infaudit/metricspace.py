"""Feature-space geometry: domains, metrics, portions and siblings.

Vectors are plain numpy arrays. Binary domains live in {0, 1}^m and are
measured with the Hamming distance; continuous domains live in [-1, 1]^m and
use the Manhattan or Euclidean distance.
"""

from __future__ import annotations

import dataclasses
import enum
import itertools
import math
from collections.abc import Sequence

import numpy as np

DEFAULT_SIBLING_CAP = 2**20
MASK = None  # marker stored in Portion.values at unknown positions


class DomainKind(str, enum.Enum):
    BINARY = "binary"
    CONTINUOUS = "continuous"


class Metric(str, enum.Enum):
    HAMMING = "hamming"
    MANHATTAN = "manhattan"
    EUCLIDEAN = "euclidean"


class DomainError(ValueError):
    """A vector, index set or metric does not fit the feature domain."""


class SiblingCapError(ValueError):
    """Sibling enumeration would exceed the configured candidate cap."""


@dataclasses.dataclass(frozen=True)
class FeatureDomain:
    kind: DomainKind
    dimension: int

    def __post_init__(self):
        object.__setattr__(self, "kind", DomainKind(self.kind))
        if self.dimension < 1:
            raise DomainError(f"dimension must be >= 1, got {self.dimension}")

    @property
    def bounds(self) -> tuple[float, float]:
        return (0.0, 1.0) if self.kind is DomainKind.BINARY else (-1.0, 1.0)

    @property
    def default_metric(self) -> Metric:
        return Metric.HAMMING if self.kind is DomainKind.BINARY else Metric.MANHATTAN

    def validate(self, x) -> np.ndarray:
        """Returns `x` as a float array after checking shape and bounds.

        Accepts a single vector of length m or a 2-D batch with m columns.
        """
        arr = np.asarray(x, dtype=float)
        if arr.shape[-1:] != (self.dimension,) or arr.ndim > 2:
            raise DomainError(
                f"expected vectors of dimension {self.dimension}, got shape {arr.shape}"
            )
        if not np.all(np.isfinite(arr)):
            raise DomainError("vector contains non-finite values")
        if self.kind is DomainKind.BINARY:
            if not np.all((arr == 0) | (arr == 1)):
                raise DomainError("binary domain requires entries in {0, 1}")
        elif np.any(arr < -1) or np.any(arr > 1):
            raise DomainError("continuous domain requires entries in [-1, 1]")
        return arr

    def diameter(self, metric: Metric | str) -> float:
        """Largest possible distance between two points of the domain."""
        metric = check_metric(self, metric)
        m = self.dimension
        if metric is Metric.HAMMING:
            return float(m)
        if metric is Metric.MANHATTAN:
            return 2.0 * m
        return 2.0 * math.sqrt(m)


def check_metric(domain: FeatureDomain, metric: Metric | str) -> Metric:
    metric = Metric(metric)
    if domain.kind is DomainKind.BINARY and metric is not Metric.HAMMING:
        raise DomainError(f"{metric.value} distance is not defined on binary domains here")
    if domain.kind is DomainKind.CONTINUOUS and metric is Metric.HAMMING:
        raise DomainError("hamming distance requires a binary domain")
    return metric


def _pairwise(a: np.ndarray, b: np.ndarray, metric: Metric) -> np.ndarray:
    # a: (p, m), b: (q, m) -> (p, q)
    if metric is Metric.HAMMING:
        # exact for 0/1 data: |a| + |b| - 2 a.b counts differing coordinates
        na = a.sum(axis=1)[:, None]
        nb = b.sum(axis=1)[None, :]
        return na + nb - 2.0 * (a @ b.T)
    diff = np.abs(a[:, None, :] - b[None, :, :])
    if metric is Metric.MANHATTAN:
        return diff.sum(axis=2)
    return np.sqrt((diff**2).sum(axis=2))


def distance(x, y, metric: Metric | str, domain: FeatureDomain | None = None) -> float:
    """Distance between two vectors of the same dimension."""
    metric = Metric(metric)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim != 1 or x.shape != y.shape:
        raise DomainError(f"dimension mismatch: {x.shape} vs {y.shape}")
    if domain is not None:
        check_metric(domain, metric)
        domain.validate(x)
        domain.validate(y)
    elif metric is Metric.HAMMING and not (
        np.all((x == 0) | (x == 1)) and np.all((y == 0) | (y == 1))
    ):
        raise DomainError("hamming distance requires binary vectors")
    diff = np.abs(x - y)
    if metric is Metric.HAMMING:
        return float(np.count_nonzero(diff))
    if metric is Metric.MANHATTAN:
        return float(diff.sum())
    return float(np.sqrt((diff**2).sum()))


def distances_to_set(
    queries, X, metric: Metric | str, chunk: int = 2048
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised `distance_to_set` for a batch of queries.

    Returns (distances, nearest_indices); ties go to the lowest index.
    """
    metric = Metric(metric)
    Q = np.atleast_2d(np.asarray(queries, dtype=float))
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[0] == 0:
        raise DomainError("distance to an empty set is undefined")
    if Q.shape[1] != X.shape[1]:
        raise DomainError(f"dimension mismatch: {Q.shape[1]} vs {X.shape[1]}")
    dists = np.empty(Q.shape[0])
    idx = np.empty(Q.shape[0], dtype=np.int64)
    # Manhattan/Euclidean broadcast (p, q, m); keep the block small
    step = chunk if metric is Metric.HAMMING else max(1, 2**22 // (X.shape[0] * X.shape[1] + 1))
    for start in range(0, Q.shape[0], step):
        block = _pairwise(Q[start : start + step], X, metric)
        if metric is Metric.HAMMING:
            block = np.rint(block)
        j = np.argmin(block, axis=1)  # argmin returns the first minimum
        idx[start : start + step] = j
        dists[start : start + step] = block[np.arange(block.shape[0]), j]
    return dists, idx


def distance_to_set(x, X, metric: Metric | str) -> tuple[float, int]:
    """Distance from `x` to its nearest neighbour in `X`, and that neighbour's index."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise DomainError("expected a single vector")
    d, j = distances_to_set(x[None, :], X, metric)
    return float(d[0]), int(j[0])


@dataclasses.dataclass(frozen=True)
class Portion:
    """A vector with the features in `unknown` masked out.

    `values` keeps the full vector with masked entries replaced by None so the
    public view matches the starred notation; `known` is the numeric copy with
    masked entries zeroed, used for computation.
    """

    values: tuple
    unknown: tuple[int, ...]

    @property
    def dimension(self) -> int:
        return len(self.values)

    @property
    def known(self) -> np.ndarray:
        return np.array([0.0 if v is MASK else v for v in self.values])


def make_portion(x, S: Sequence[int] | set[int]) -> Portion:
    x = np.asarray(x, dtype=float)
    m = x.shape[0]
    S = sorted(set(int(i) for i in S))
    if not S:
        raise DomainError("the unknown index set must be non-empty")
    if len(S) >= m:
        raise DomainError("at least one feature must stay known")
    if S[0] < 0 or S[-1] >= m:
        raise DomainError(f"index out of range for dimension {m}: {S}")
    mask = set(S)
    values = tuple(MASK if i in mask else float(v) for i, v in enumerate(x))
    return Portion(values=values, unknown=tuple(S))


def bin_centers(bins: int) -> np.ndarray:
    """Centres of a uniform partition of [-1, 1] into `bins` bins."""
    edges = np.linspace(-1.0, 1.0, bins + 1)
    return (edges[:-1] + edges[1:]) / 2.0


def bin_index(values, bins: int) -> np.ndarray:
    """Index of the uniform [-1, 1] bin holding each value (1.0 goes to the last bin)."""
    v = np.asarray(values, dtype=float)
    return np.clip(np.floor((v + 1.0) / 2.0 * bins), 0, bins - 1).astype(np.int64)


@dataclasses.dataclass(frozen=True)
class SiblingSet:
    portion: Portion
    representatives: np.ndarray  # per-unknown-feature candidate values
    assignments: np.ndarray  # (n_candidates, |S|) values at the unknown slots

    def __len__(self) -> int:
        return self.assignments.shape[0]

    @property
    def candidates(self) -> np.ndarray:
        """Full candidate vectors, shape (n_candidates, m)."""
        out = np.tile(self.portion.known, (len(self), 1))
        out[:, list(self.portion.unknown)] = self.assignments
        return out


def sibling_grid(representatives: np.ndarray, width: int) -> np.ndarray:
    """Every assignment of `representatives` to `width` slots, in lexicographic order."""
    b = len(representatives)
    codes = np.arange(b**width)
    digits = (codes[:, None] // (b ** np.arange(width - 1, -1, -1))[None, :]) % b
    return np.asarray(representatives, dtype=float)[digits]


def enumerate_siblings(
    p: Portion,
    bins_per_feature: int,
    domain: FeatureDomain | None = None,
    cap: int = DEFAULT_SIBLING_CAP,
) -> SiblingSet:
    """All candidate completions of a portion.

    Binary domains use the two values {0, 1}; continuous domains use the
    centres of `bins_per_feature` equal bins of [-1, 1].
    """
    binary = domain is None or domain.kind is DomainKind.BINARY
    if binary:
        if bins_per_feature != 2:
            raise DomainError("binary features have exactly 2 value bins")
        reps = np.array([0.0, 1.0])
    else:
        if not 2 <= bins_per_feature <= 10:
            raise DomainError("continuous features use between 2 and 10 bins")
        reps = bin_centers(bins_per_feature)
    width = len(p.unknown)
    count = bins_per_feature**width
    if count > cap:
        raise SiblingCapError(f"{count} siblings exceed the cap of {cap}")
    return SiblingSet(portion=p, representatives=reps, assignments=sibling_grid(reps, width))


def radius_for_unknowns(metric: Metric | str, i: int) -> float:
    """Smallest radius whose ball around x holds every sibling with i unknowns."""
    metric = Metric(metric)
    if i < 1:
        raise DomainError("need at least one unknown feature")
    if metric is Metric.HAMMING:
        return float(i)
    if metric is Metric.MANHATTAN:
        return 2.0 * i
    return math.sqrt(4.0 * i)


def expected_random_guess_distance(metric: Metric | str, m_prime: int) -> float:
    """Expected distance between a vector and a uniformly random guess of m' coordinates."""
    metric = Metric(metric)
    if m_prime < 1:
        raise DomainError("m' must be positive")
    if metric is Metric.HAMMING:
        return m_prime / 2.0
    if metric is Metric.MANHATTAN:
        return 2.0 * m_prime / 3.0
    raise DomainError(f"no closed form for the {metric.value} distance")


def all_binary_vectors(m: int) -> np.ndarray:
    """Every vector of {0, 1}^m as rows (small m only)."""
    return np.array(list(itertools.product((0.0, 1.0), repeat=m)))
