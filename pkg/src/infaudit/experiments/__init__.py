"""Membership and attribute inference experiments, metrics and fixtures."""

from infaudit.experiments.attribute import aai_advantage, ai_advantage, ai_attack, attribute_inference
from infaudit.experiments.kmeans import kmeans_labels
from infaudit.experiments.membership import (
    decision_region_volumes,
    distance_stratified_auc,
    mi_experiment,
    per_class_stratified_auc,
    smi_experiment,
)
from infaudit.experiments.metrics import auc, best_threshold, binomial_sigma
from infaudit.experiments.mrmr import mrmr_select
from infaudit.experiments.report import ExperimentReport
from infaudit.experiments.sweep import overfitting_sweep
from infaudit.experiments.synthesis import synthesize_nonmembers_binary, synthesize_nonmembers_continuous

__all__ = [
    "ExperimentReport",
    "aai_advantage",
    "ai_advantage",
    "ai_attack",
    "attribute_inference",
    "auc",
    "best_threshold",
    "binomial_sigma",
    "decision_region_volumes",
    "distance_stratified_auc",
    "kmeans_labels",
    "mi_experiment",
    "mrmr_select",
    "overfitting_sweep",
    "per_class_stratified_auc",
    "smi_experiment",
    "synthesize_nonmembers_binary",
    "synthesize_nonmembers_continuous",
]
