"""Labelled datasets: container, CSV ingestion and synthetic fixtures."""

from __future__ import annotations

import csv
import dataclasses
import re
from pathlib import Path

import numpy as np

from infaudit.metricspace import DomainKind, FeatureDomain
from infaudit.seeding import derive_rng, derive_seed


class DatasetError(ValueError):
    pass


@dataclasses.dataclass
class LabeledDataset:
    """Feature matrix with integer class labels in [0, k)."""

    X: np.ndarray
    y: np.ndarray
    domain: FeatureDomain
    k: int | None = None
    feature_names: tuple[str, ...] | None = None

    def __post_init__(self):
        self.X = np.atleast_2d(np.asarray(self.X, dtype=float))
        self.y = np.asarray(self.y, dtype=np.int64).reshape(-1)
        if self.X.shape[0] != self.y.shape[0]:
            raise DatasetError(f"{self.X.shape[0]} rows but {self.y.shape[0]} labels")
        if self.X.shape[0]:
            self.domain.validate(self.X)
        if self.k is None:
            self.k = int(self.y.max()) + 1 if self.y.size else 0
        if self.y.size and (self.y.min() < 0 or self.y.max() >= self.k):
            raise DatasetError(f"labels must lie in [0, {self.k})")

    def __len__(self) -> int:
        return self.X.shape[0]

    @property
    def m(self) -> int:
        return self.domain.dimension

    def subset(self, idx) -> LabeledDataset:
        idx = np.asarray(idx)
        if idx.dtype != bool:
            idx = idx.astype(np.int64)
        return LabeledDataset(self.X[idx], self.y[idx], self.domain, self.k, self.feature_names)

    def split(self, fractions, rng: np.random.Generator) -> list[LabeledDataset]:
        """Random disjoint parts with the given fractions of the rows."""
        fractions = list(fractions)
        if any(not 0 < f < 1 for f in fractions) or sum(fractions) > 1 + 1e-12:
            raise DatasetError(f"split fractions must be in (0, 1) and sum to <= 1: {fractions}")
        perm = rng.permutation(len(self))
        parts, start = [], 0
        for f in fractions:
            size = int(round(f * len(self)))
            parts.append(self.subset(np.sort(perm[start : start + size])))
            start += size
        return parts

    def take(self, sizes, rng: np.random.Generator) -> list[LabeledDataset]:
        """Random disjoint parts with the given row counts."""
        if sum(sizes) > len(self):
            raise DatasetError(f"requested {sum(sizes)} rows from a dataset of {len(self)}")
        perm = rng.permutation(len(self))
        parts, start = [], 0
        for size in sizes:
            parts.append(self.subset(np.sort(perm[start : start + size])))
            start += size
        return parts


@dataclasses.dataclass(frozen=True)
class Normalizer:
    """Per-column affine map of [lo, hi] onto [-1, 1]."""

    lo: np.ndarray
    hi: np.ndarray

    def forward(self, raw) -> np.ndarray:
        raw = np.asarray(raw, dtype=float)
        span = np.where(self.hi > self.lo, self.hi - self.lo, 1.0)
        out = 2.0 * (raw - self.lo) / span - 1.0
        return np.where(self.hi > self.lo, out, 0.0)

    def inverse(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        return (z + 1.0) / 2.0 * (self.hi - self.lo) + self.lo


@dataclasses.dataclass(frozen=True)
class DatasetSpec:
    path: str
    label: str  # column name, or "derive:kmeans(k)"
    kind: DomainKind = DomainKind.BINARY
    split: tuple[float, ...] = (0.5, 0.5)
    normalize: bool = True

    def __post_init__(self):
        object.__setattr__(self, "kind", DomainKind(self.kind))
        object.__setattr__(self, "split", tuple(float(f) for f in self.split))
        if any(not 0 < f < 1 for f in self.split) or sum(self.split) > 1 + 1e-12:
            raise DatasetError(f"split fractions must be in (0, 1) and sum to <= 1: {self.split}")


_KMEANS_LABEL = re.compile(r"^derive:kmeans\((\d+)\)$")


def _read_csv(path: Path) -> tuple[list[str], list[list[str]]]:
    if not path.exists():
        raise DatasetError(f"no such file: {path}")
    with path.open(newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if not rows:
        raise DatasetError(f"{path} is empty")
    header, body = rows[0], rows[1:]
    for lineno, row in enumerate(body, start=2):
        if len(row) != len(header):
            raise DatasetError(
                f"{path}:{lineno}: expected {len(header)} cells, found {len(row)}"
            )
    return header, body


def _to_float(cells: list[list[str]], path: Path) -> np.ndarray:
    try:
        return np.array([[float(c) for c in row] for row in cells], dtype=float)
    except ValueError as exc:
        raise DatasetError(f"{path}: non-numeric cell ({exc})") from None


def load_table(spec: DatasetSpec, seed: int = 0) -> tuple[LabeledDataset, Normalizer | None]:
    """Parses the CSV named by `spec` into a full (unsplit) dataset."""
    from infaudit.experiments.kmeans import kmeans_labels

    path = Path(spec.path)
    header, body = _read_csv(path)
    derived = _KMEANS_LABEL.match(spec.label)
    if derived:
        feature_cols = list(range(len(header)))
        raw_labels = None
    else:
        if spec.label not in header:
            raise DatasetError(f"unknown label column {spec.label!r}; columns: {header}")
        label_col = header.index(spec.label)
        feature_cols = [i for i in range(len(header)) if i != label_col]
        raw_labels = [row[label_col] for row in body]
    X = _to_float([[row[i] for i in feature_cols] for row in body], path)
    names = tuple(header[i] for i in feature_cols)
    normalizer = None
    if spec.kind is DomainKind.BINARY:
        if not np.all((X == 0) | (X == 1)):
            raise DatasetError(f"{path}: binary features must be 0 or 1")
    elif spec.normalize:
        normalizer = Normalizer(X.min(axis=0), X.max(axis=0))
        X = normalizer.forward(X)
    domain = FeatureDomain(spec.kind, X.shape[1])
    if derived:
        k = int(derived.group(1))
        y = kmeans_labels(X, k, seed=derive_seed(seed, "labels"))
    else:
        # contiguous remap in sorted order of the raw label values
        try:
            keys = sorted(set(raw_labels), key=float)
        except ValueError:
            keys = sorted(set(raw_labels))
        lookup = {v: i for i, v in enumerate(keys)}
        y = np.array([lookup[v] for v in raw_labels], dtype=np.int64)
        k = len(keys)
    return LabeledDataset(X, y, domain, k, names), normalizer


def load_dataset(spec: DatasetSpec, seed: int = 0) -> list[LabeledDataset]:
    """Loads the CSV and returns the seeded split parts (e.g. [train, test])."""
    full, _ = load_table(spec, seed)
    return full.split(spec.split, derive_rng(seed, "split"))


def synth_dataset(
    kind: DomainKind | str,
    m: int,
    n: int,
    k: int,
    cluster_spread: float,
    seed: int,
    imbalance: float = 0.0,
) -> LabeledDataset:
    """Clustered stand-in for the tabular benchmarks.

    Binary: each class has a random {0, 1} centre and every coordinate of a
    point is flipped away from the centre with probability `cluster_spread`
    (so 0 reproduces the centres, 0.5 is pure noise). Continuous: centres are
    uniform in [-1, 1]^m and points add Gaussian noise of scale
    `cluster_spread`, clipped to the domain.

    `imbalance` > 0 skews class frequencies geometrically (class j has weight
    (1 - imbalance)^j), which gives one class a dominant decision region.
    """
    kind = DomainKind(kind)
    if k < 1 or n < k or m < 1:
        raise DatasetError(f"degenerate parameters m={m}, n={n}, k={k}")
    if cluster_spread < 0 or (kind is DomainKind.BINARY and cluster_spread > 0.5):
        raise DatasetError(f"cluster_spread out of range: {cluster_spread}")
    if not 0 <= imbalance < 1:
        raise DatasetError("imbalance must be in [0, 1)")
    rng = derive_rng(seed, f"synth/{kind.value}")
    weights = (1.0 - imbalance) ** np.arange(k)
    weights /= weights.sum()
    # every class appears at least once; the remainder is drawn by weight
    y = np.concatenate([np.arange(k), rng.choice(k, size=n - k, p=weights)])
    y = y[rng.permutation(n)]
    if kind is DomainKind.BINARY:
        centers = rng.integers(0, 2, size=(k, m)).astype(float)
        flips = rng.random((n, m)) < cluster_spread
        X = np.abs(centers[y] - flips)
    else:
        centers = rng.uniform(-1.0, 1.0, size=(k, m))
        X = np.clip(centers[y] + cluster_spread * rng.standard_normal((n, m)), -1.0, 1.0)
    return LabeledDataset(X, y, FeatureDomain(kind, m), k)
