"""Minimal-redundancy maximal-relevance feature ranking (MID variant)."""

from __future__ import annotations

import numpy as np

from infaudit.datasets import LabeledDataset
from infaudit.metricspace import DomainKind


def discretize(X: np.ndarray, bins: int) -> np.ndarray:
    """Equal-width integer codes per column over [-1, 1]."""
    return np.clip(np.floor((X + 1.0) / 2.0 * bins), 0, bins - 1).astype(np.int64)


def mutual_information(a: np.ndarray, b: np.ndarray) -> float:
    """Plug-in mutual information (nats) of two integer-coded columns."""
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    _, ai = np.unique(a, return_inverse=True)
    _, bi = np.unique(b, return_inverse=True)
    joint = np.zeros((ai.max() + 1, bi.max() + 1))
    np.add.at(joint, (ai, bi), 1.0)
    joint /= joint.sum()
    pa = joint.sum(axis=1, keepdims=True)
    pb = joint.sum(axis=0, keepdims=True)
    nz = joint > 0
    return float((joint[nz] * np.log(joint[nz] / (pa @ pb)[nz])).sum())


def _mi_with_columns(codes: np.ndarray, target: np.ndarray) -> np.ndarray:
    """I(column; target) for every column, vectorised over columns."""
    n, m = codes.shape
    _, t = np.unique(target, return_inverse=True)
    n_t = t.max() + 1
    n_c = codes.max() + 1
    # joint counts (m, n_c, n_t)
    flat = (np.arange(m)[None, :] * n_c + codes) * n_t + t[:, None]
    joint = np.bincount(flat.ravel(), minlength=m * n_c * n_t).reshape(m, n_c, n_t) / n
    pc = joint.sum(axis=2, keepdims=True)
    pt = joint.sum(axis=1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(joint > 0, joint * np.log(joint / (pc * pt)), 0.0)
    return terms.sum(axis=(1, 2))


def mrmr_select(data: LabeledDataset, k_features: int, bins: int = 10) -> list[int]:
    """Greedy mRMR ordering of `k_features` feature indices.

    The first pick maximises I(f; label); each later pick maximises
    I(f; label) minus the mean I(f; g) over already chosen g. Continuous
    features are binned into `bins` equal-width bins first. Ties go to the
    lower index.
    """
    m = data.m
    if not 1 <= k_features < m:
        raise ValueError(f"k_features must be in [1, {m}), got {k_features}")
    if data.domain.kind is DomainKind.BINARY:
        codes = data.X.astype(np.int64)
    else:
        codes = discretize(data.X, bins)
    relevance = _mi_with_columns(codes, data.y)
    chosen = [int(np.argmax(relevance))]
    redundancy = np.zeros(m)
    while len(chosen) < k_features:
        redundancy += _mi_with_columns(codes, codes[:, chosen[-1]])
        score = relevance - redundancy / len(chosen)
        score[chosen] = -np.inf
        chosen.append(int(np.argmax(score)))
    return chosen
