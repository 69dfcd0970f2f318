"""Overfitting sweep: training-set size against attribute-inference advantage."""

from __future__ import annotations

import dataclasses
from collections.abc import Sequence

import numpy as np
from scipy.stats import spearmanr

from infaudit.attacks import DEFAULT_ATTACK_CFG, make_scorer, train_shadow_attack
from infaudit.datasets import DatasetError, LabeledDataset
from infaudit.experiments.attribute import attribute_inference
from infaudit.models import MlpConfig, train_mlp
from infaudit.seeding import derive_seed


@dataclasses.dataclass(frozen=True)
class SweepRow:
    size: int
    generalization_error: float
    ai_advantage: float
    aai_advantage: float
    train_accuracy: float
    test_accuracy: float


@dataclasses.dataclass
class SweepResult:
    rows: list[SweepRow]
    attack: str
    alpha: float

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.rows])

    def spearman(self, a: str = "generalization_error", b: str = "aai_advantage") -> float:
        return float(spearmanr(self.column(a), self.column(b)).statistic)


def overfitting_sweep(
    base: LabeledDataset,
    sizes: Sequence[int],
    attack: str = "shadow",
    S: Sequence[int] = (),
    alpha: float | None = None,
    seed: int = 0,
    model_cfg: MlpConfig | None = None,
    attack_cfg: MlpConfig = DEFAULT_ATTACK_CFG,
    n_shadows: int = 2,
    n_challenges: int = 500,
    bins: int = 2,
) -> SweepResult:
    """Trains one target per size and runs AI and AAI against it.

    Each size draws disjoint train, test (same size) and, for the shadow
    attack, a shadow pool of 2 * n_shadows * size rows from `base`, so the
    splits stay proportional as the size grows.
    """
    sizes = list(sizes)
    if sizes != sorted(sizes) or len(set(sizes)) != len(sizes):
        raise ValueError("sizes must be strictly ascending")
    if not S:
        raise ValueError("S must name at least one feature")
    model_cfg = model_cfg or MlpConfig()
    per_size = 2 + (2 * n_shadows if attack == "shadow" else 0)
    if per_size * sizes[-1] > len(base):
        raise DatasetError(f"size {sizes[-1]} needs {per_size * sizes[-1]} rows, dataset has {len(base)}")
    rows = []
    for size in sizes:
        rng = np.random.default_rng(derive_seed(seed, f"sweep/{size}"))
        parts = base.take([size, size] + ([2 * n_shadows * size] if attack == "shadow" else []), rng)
        train, test = parts[0], parts[1]
        cfg = model_cfg.replace(seed=derive_seed(seed, f"sweep/{size}/model") % 2**31)
        model, rep = train_mlp(train, base.k, cfg, test=test)
        shadow = None
        if attack == "shadow":
            shadow = train_shadow_attack(parts[2], n_shadows, cfg, attack_cfg,
                                         seed=derive_seed(seed, f"sweep/{size}/shadow") % 2**31, k=base.k)
        scorer = make_scorer(attack, model, shadow)
        res = attribute_inference(model, [scorer], train, test, S, bins, alpha,
                                  seed=derive_seed(seed, f"sweep/{size}/ai"), n_challenges=n_challenges)
        r = res[scorer.name]
        alpha = r.alpha
        rows.append(SweepRow(size, rep.generalization_error, r.ai_advantage, r.aai_advantage,
                             rep.train_accuracy, rep.test_accuracy))
    return SweepResult(rows, attack, float(alpha))
