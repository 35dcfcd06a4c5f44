"""
Accuracy as test rows lose views
================================

A trained model classifies through an inferred latent vector, so a test row
can arrive with any nonempty subset of views. This script trains once on
complete data and then scores the same test split three times: all views
present, one view per row, two views per row.
"""

import numpy as np

from pmvl.data import MultiViewDataset, split, synth_dataset
from pmvl.supervised import TrainConfig, evaluate, retune, train

data = synth_dataset(300, 3, 8, [20, 16, 12], seed=1,
                     noise_scale=0.05, nuisance_scale=3.5)
train_d, test_d = split(data, 0.7, seed=1)

model = retune(train(train_d, TrainConfig(
    latent_dim=32, lam=10.0, lr_nets=0.05, lr_latent=0.02,
    epochs=200, infer_iters=300, infer_lr=0.05, seed=1)), train_d)


def keep_views(d, count, seed):
    # keep `count` randomly chosen views per row, zero out the rest
    rng = np.random.default_rng(seed)
    mask = np.zeros_like(d.mask)
    for i in range(d.n_samples):
        mask[i, rng.choice(d.n_views, size=count, replace=False)] = 1
    views = [v * mask[:, j:j + 1] for j, v in enumerate(d.views)]
    return MultiViewDataset(views, mask, d.labels)


for count in (3, 2, 1):
    subset = keep_views(test_d, count, seed=count)
    acc = evaluate(model, subset).accuracy
    print(f"{count} view(s) per test row: accuracy {acc:.3f}")
