"""Membership leaks while strong membership does not: the ball classifier game."""

import numpy as np

from infaudit.separation import build_ball_classifier, sample_spread_codewords, theorem1_experiment

# 1000 codewords in {0,1}^64, pairwise more than 3 apart, each with one
# partner at Hamming distance 1 that shares its label
code = sample_spread_codewords(m=64, N=1000, r=1, k=4, seed=0)
code.verify()
print("codewords:", code.N, "points:", code.points.shape)

# the classifier memorises 100 draws and labels their radius-1 balls
clf, idx = build_ball_classifier(code, n=100, seed=1)
print("distinct training points:", len(np.unique(idx)))

res = theorem1_experiment(code, n=100, trials=20_000, seed=2)
print(f"MI advantage  {res.mi_advantage:.3f} (bound {res.bound:.3f})")
print(f"SMI advantage {res.smi_advantage:.3f}")
# the partner of a member is inside the same labelled ball, so the
# "classifier is right" rule cannot tell them apart
