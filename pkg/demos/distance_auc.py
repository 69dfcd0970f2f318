"""How membership AUC grows with distance from the training set."""

import numpy as np

from infaudit.attacks import ConfScorer
from infaudit.datasets import synth_dataset
from infaudit.experiments.metrics import auc
from infaudit.experiments.synthesis import synthesize_batch
from infaudit.models import MlpConfig, train_mlp

data = synth_dataset("binary", m=200, n=3000, k=10, cluster_spread=0.44, seed=7)
train, test = data.take([800, 800], np.random.default_rng(0))
net, rep = train_mlp(train, data.k, MlpConfig(hidden_layers=(64,), epochs=60), test=test)
print(f"train acc {rep.train_accuracy:.2f}  test acc {rep.test_accuracy:.2f}")

# synthetic non-members at chosen Hamming distances from the training set
rng = np.random.default_rng(1)
bases = rng.choice(len(train), 100, replace=False)
grid = [1, 2, 4, 8, 16, 32, 64]
batch = synthesize_batch(train.X[bases], train.y[bases], train, grid, 3, rng, strict=False)

scorer = ConfScorer(net)
pos = scorer.score(train.X, train.y)
neg = scorer.score(batch.X, batch.y)
for d in grid:
    sel = batch.distance == d
    if sel.any():
        print(f"distance {d:3d}: AUC {auc(pos, neg[sel]):.3f}  ({sel.sum()} non-members)")
# close neighbours look like members; far ones are easy to reject
