"""snapnet: infer the interaction graph of a networked dynamical system from independent snapshots."""

from .baselines import correlation, mutual_information, partial_correlation, threshold_top_k
from .dynamics import DynamicsSpec, SimConfig, sample_snapshots
from .graphs import Graph, GraphGenSpec, binarize, enumerate_connected, generate, graph_loss, preset
from .model import PredictionNet, RelaxedGraph, forward, prediction_loss, relaxed_adjacency
from .snapshots import SnapshotSet
from .train import TrainConfig, train, train_weights_fixed_graph, train_weights_fixed_graphs

__version__ = "0.1.0"

__all__ = [
    "DynamicsSpec", "Graph", "GraphGenSpec", "PredictionNet", "RelaxedGraph", "SimConfig",
    "SnapshotSet", "TrainConfig", "binarize", "correlation", "enumerate_connected", "forward",
    "generate", "graph_loss", "mutual_information", "partial_correlation", "prediction_loss",
    "preset", "relaxed_adjacency", "sample_snapshots", "threshold_top_k", "train",
    "train_weights_fixed_graph", "train_weights_fixed_graphs",
]
