"""Prediction loss over every connected graph on five nodes.

The network weights are trained with each of the 728 candidate graphs held
fixed. Candidates closer to the true graph should predict snapshots better.
This is a reduced run (few snapshots and epochs) that finishes in about a minute.
"""

import numpy as np

from snapnet import DynamicsSpec, SimConfig, TrainConfig, enumerate_connected, generate, graph_loss, preset
from snapnet import sample_snapshots, train_weights_fixed_graphs

truth = generate(preset("Bull"))
snaps = sample_snapshots(truth, DynamicsSpec("SIS"), SimConfig(seed=0), 1000)
candidates = enumerate_connected(5)
losses = np.array(train_weights_fixed_graphs(snaps, candidates, TrainConfig(seed=0, lr=1e-3), max_epochs=50))
distance = np.array([graph_loss(c, truth) for c in candidates])

print("graph loss  candidates  mean prediction loss")
for d in np.unique(distance):
    sel = distance == d
    print(f"{d:10d}  {sel.sum():10d}  {losses[sel].mean():.4f}")
print("rank of the true graph:", int((losses < losses[distance == 0][0]).sum()), "of", len(candidates))
