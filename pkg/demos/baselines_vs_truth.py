"""Pairwise statistics as graph estimators.

Correlation, mutual information and partial correlation each score every node
pair; keeping the top-|E| pairs gives a graph. On SIS the infection spreads
along edges, so neighbours are positively correlated and every score works.
Inverted-voter neighbours disagree, so their signed correlation is negative
and those pairs rank last. Mutual information ignores the sign and still
finds most edges.
"""

from snapnet import (DynamicsSpec, SimConfig, correlation, generate, graph_loss, mutual_information,
                     partial_correlation, preset, sample_snapshots, threshold_top_k)

truth = generate(preset("ER"))
print(f"ER preset: {truth.n} nodes, {truth.n_edges} edges")

for model in ("SIS", "InvVoter"):
    snaps = sample_snapshots(truth, DynamicsSpec(model), SimConfig(seed=0), 5000)
    for name, score in (("Corr", correlation), ("MI", mutual_information), ("ParCorr", partial_correlation)):
        guess = threshold_top_k(score(snaps), truth.n_edges)
        print(f"{model:9s} {name:8s} graph loss {graph_loss(guess, truth):3d}")
