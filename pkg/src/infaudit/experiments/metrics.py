"""ROC AUC and empirical advantage estimators."""

from __future__ import annotations

import math

import numpy as np
from scipy.stats import rankdata


def auc(member_scores, nonmember_scores) -> float:
    """Mann-Whitney AUC: share of (member, non-member) pairs ranked correctly.

    A pair where the member scores higher counts 1, a tie counts 1/2.
    """
    pos = np.asarray(member_scores, dtype=float).ravel()
    neg = np.asarray(nonmember_scores, dtype=float).ravel()
    if pos.size == 0 or neg.size == 0:
        raise ValueError("both score lists must be non-empty")
    ranks = rankdata(np.concatenate([pos, neg]))  # average ranks for ties
    u = ranks[: pos.size].sum() - pos.size * (pos.size + 1) / 2.0
    return float(u / (pos.size * neg.size))


def auc_brute_force(member_scores, nonmember_scores) -> float:
    """Pair-counting AUC; O(n*m), for cross-checking `auc`."""
    wins = 0.0
    for a in member_scores:
        for b in nonmember_scores:
            wins += 1.0 if a > b else 0.5 if a == b else 0.0
    return wins / (len(member_scores) * len(nonmember_scores))


def advantage_from_decisions(member_decisions, nonmember_decisions) -> float:
    """Empirical TPR - FPR of 0/1 membership decisions."""
    dm = np.asarray(member_decisions, dtype=float).ravel()
    dn = np.asarray(nonmember_decisions, dtype=float).ravel()
    if dm.size == 0 or dn.size == 0:
        raise ValueError("both decision lists must be non-empty")
    if not (np.isin(dm, (0, 1)).all() and np.isin(dn, (0, 1)).all()):
        raise ValueError("decisions must be 0 or 1")
    return float(dm.mean() - dn.mean())


def advantage_at_threshold(member_scores, nonmember_scores, threshold: float) -> float:
    """Advantage of the rule 'member iff score >= threshold'."""
    pos = np.asarray(member_scores, dtype=float)
    neg = np.asarray(nonmember_scores, dtype=float)
    return advantage_from_decisions(pos >= threshold, neg >= threshold)


def roc_points(member_scores, nonmember_scores) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(thresholds, TPR, FPR) for every distinct score, highest threshold first."""
    pos = np.sort(np.asarray(member_scores, dtype=float))
    neg = np.sort(np.asarray(nonmember_scores, dtype=float))
    thresholds = np.unique(np.concatenate([pos, neg]))[::-1]
    tpr = 1.0 - np.searchsorted(pos, thresholds, side="left") / pos.size
    fpr = 1.0 - np.searchsorted(neg, thresholds, side="left") / neg.size
    return thresholds, tpr, fpr


def best_threshold(member_scores, nonmember_scores) -> tuple[float, float]:
    """Threshold maximising TPR - FPR, and that advantage (0 if nothing beats chance)."""
    thresholds, tpr, fpr = roc_points(member_scores, nonmember_scores)
    gaps = tpr - fpr
    j = int(np.argmax(gaps))
    if gaps[j] <= 0:
        return math.inf, 0.0
    return float(thresholds[j]), float(gaps[j])


def binomial_sigma(n_members: int, n_nonmembers: int) -> float:
    """Worst-case (p = 1/2) standard error of a TPR - FPR estimate."""
    return math.sqrt(0.25 / n_members + 0.25 / n_nonmembers)
