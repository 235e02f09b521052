"""Recover the 5-node bull graph from independent SIS snapshots.

Each snapshot is one node-state vector observed after the epidemic has mixed;
the joint model learns the graph and the local update rule together.
Runs in well under a minute.
"""

from snapnet import DynamicsSpec, SimConfig, TrainConfig, generate, graph_loss, preset, sample_snapshots, train

truth = generate(preset("Bull"))
snaps = sample_snapshots(truth, DynamicsSpec("SIS"), SimConfig(seed=0), 2000)
print(f"{snaps.m} snapshots, {snaps.n} nodes, {snaps.s} states")
print("infected fraction per node:", snaps.data.mean(axis=0).round(3))

cfg = TrainConfig(seed=0, lr=1e-3, max_epochs=1500)
rg, net, report = train(snaps, cfg, ground_truth=truth)

print("true edges:    ", sorted(truth.edges()))
print("inferred edges:", sorted(report.final_graph.edges()))
print(f"graph loss {graph_loss(report.final_graph, truth)} after {len(report.epochs)} epochs "
      f"({report.runtime_s:.1f}s, stopped early: {report.stopped_early})")
