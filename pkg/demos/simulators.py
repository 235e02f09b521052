"""Stationary snapshots from each dynamical model on a small grid.

Prints the state distribution of the sampled snapshots, which is what every
inference method gets to see.
"""

import numpy as np

from snapnet import DynamicsSpec, SimConfig, generate, preset, sample_snapshots

grid = generate(preset("Grid2D", rows=5, cols=5))
for model in ("SIS", "InvVoter", "MajorityFlip", "RPS", "ForestFire", "CML"):
    spec = DynamicsSpec(model)
    snaps = sample_snapshots(grid, spec, SimConfig(seed=0), 2000)
    freq = np.bincount(snaps.data.ravel(), minlength=snaps.s) / snaps.data.size
    shown = ", ".join(f"{name}={f:.2f}" for name, f in zip(spec.state_names, freq))
    print(f"{model:13s} {shown}")
