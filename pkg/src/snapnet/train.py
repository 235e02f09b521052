"""Gradients, Adam and the joint graph/weight training loop."""

from __future__ import annotations

import csv
import io
import logging
import time
from dataclasses import dataclass, field

import numpy as np

from .graphs import Graph, binarize, graph_loss
from .model import (ModelOutput, PredictionNet, RelaxedGraph, forward_dense, predict_from_counts,
                    prediction_loss, relaxed_adjacency, rowsum, sharpen_grad)
from .snapshots import SnapshotSet, batch_indices

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 100
    lr: float = 1e-4
    v0: float = 5.0
    v_step_epochs: int = 50
    v_increment: float = 1.0
    max_epochs: int = 10_000
    early_stop_window: int = 500
    check_interval: int = 50
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    seed: int = 0
    # weight-only training (fixed candidate graphs)
    plateau_window: int = 100
    plateau_tol: float = 1e-5

    def __post_init__(self):
        positive = ("batch_size", "lr", "v0", "v_step_epochs", "max_epochs", "early_stop_window",
                    "check_interval", "adam_eps", "plateau_window")
        for name in positive:
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.v_increment < 0 or self.plateau_tol < 0:
            raise ValueError("v_increment and plateau_tol must be non-negative")
        if self.early_stop_window % self.check_interval:
            raise ValueError("check_interval must divide early_stop_window")
        if not (0 <= self.adam_beta1 < 1 and 0 <= self.adam_beta2 < 1):
            raise ValueError("Adam betas must lie in [0, 1)")


def sharpness_at(epoch: int, cfg: TrainConfig = TrainConfig()) -> float:
    """Staircase schedule: ``v0 + floor(epoch / v_step_epochs) * v_increment``."""
    if epoch < 0:
        raise ValueError("epoch must be >= 0")
    return cfg.v0 + (epoch // cfg.v_step_epochs) * cfg.v_increment


# --------------------------------------------------------------------------
# reverse mode


def _softmax_backward(p, grad):
    return p * (grad - rowsum(grad * p)[..., None])


def _colsum(x):
    return np.ones(x.shape[0]) @ x


def backward(rg: RelaxedGraph | None, net: PredictionNet, output: ModelOutput) -> dict:
    """Gradients of the summed row-wise MSE of ``output`` against its inputs.

    Returns a dict keyed like :meth:`PredictionNet.params`, plus ``"C"`` when a
    relaxed graph is given. ``C`` receives the contributions of both
    ``A[i, j]`` and ``A[j, i]`` in its upper triangle; its diagonal and lower
    triangle get zero.
    """
    cache = output.cache
    if not cache or "X" not in cache:
        raise ValueError("output carries no forward cache; run forward_dense/forward first")
    X = cache["X"]
    P = output.predictions[None] if cache.get("single") else output.predictions
    b, n, s = X.shape
    grads = {}

    dz4 = _softmax_backward(P, 2.0 * (P - X) / s)
    o3 = cache["o3"]
    dz4_n = dz4.transpose(1, 0, 2)  # (n, b, s)
    grads["W4"] = np.matmul(o3.transpose(1, 2, 0), dz4_n)
    grads["b4"] = np.tensordot(np.ones(b), dz4, axes=1)
    do3 = np.matmul(dz4_n, net.W4.transpose(0, 2, 1)).transpose(1, 0, 2)
    dz3 = _softmax_backward(o3, do3).reshape(b * n, s)
    grads["W3"] = cache["h2"].T @ dz3
    grads["b3"] = _colsum(dz3)
    dz2 = (dz3 @ net.W3.T) * (cache["z2"] > 0)
    grads["W2"] = cache["h1"].T @ dz2
    grads["b2"] = _colsum(dz2)
    dz1 = (dz2 @ net.W2.T) * (cache["z1"] > 0)
    grads["W1"] = cache["m"].T @ dz1
    grads["b1"] = _colsum(dz1)

    if rg is not None:
        dM = (dz1 @ net.W1.T).reshape(b, n, s)
        dA = np.tensordot(dM, X, axes=([0, 2], [0, 2]))
        np.fill_diagonal(dA, 0.0)
        dB = dA * sharpen_grad(rg.symmetric(), rg.v)
        grads["C"] = np.triu(dB + dB.T, 1)
    return grads


# --------------------------------------------------------------------------
# Adam


@dataclass
class AdamState:
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)
    t: int = 0


def adam_step(params: dict, grads: dict, state: AdamState, lr: float,
              beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8) -> dict:
    """Bias-corrected Adam update, applied in place to ``params`` (also returned).

    Only keys present in ``grads`` are updated.
    """
    state.t += 1
    c1 = 1.0 - beta1 ** state.t
    c2 = 1.0 - beta2 ** state.t
    for key, g in grads.items():
        if key not in state.m:
            state.m[key] = np.zeros_like(g)
            state.v[key] = np.zeros_like(g)
        m, v = state.m[key], state.v[key]
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * g * g
        params[key] -= lr * (m / c1) / (np.sqrt(v / c2) + eps)
    return params


# --------------------------------------------------------------------------
# training


@dataclass
class TrainReport:
    epochs: list = field(default_factory=list)       # epoch index
    losses: list = field(default_factory=list)       # summed batch losses of that epoch
    sharpness: list = field(default_factory=list)
    checks: list = field(default_factory=list)       # (epoch, Graph) after that epoch
    graph_losses: dict = field(default_factory=dict)  # epoch -> graph loss, if ground truth known
    runtime_s: float = 0.0
    final_graph: Graph | None = None
    stopped_early: bool = False

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["epoch", "loss", "graph_loss", "v"])
        for e, loss, v in zip(self.epochs, self.losses, self.sharpness):
            w.writerow([e, repr(loss), self.graph_losses.get(e, ""), repr(v)])
        return buf.getvalue()


def _init(n, s, seed, v0):
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0]))
    rg = RelaxedGraph.init(n, rng, v=v0)
    net = PredictionNet.init(n, s, rng)
    return rg, net


def _epoch_seed(seed, epoch):
    return np.random.SeedSequence([int(seed), 1, int(epoch)])


def train(snapshots: SnapshotSet, cfg: TrainConfig = TrainConfig(), ground_truth: Graph | None = None,
          callback=None) -> tuple[RelaxedGraph, PredictionNet, TrainReport]:
    """Jointly fit the relaxed graph and the prediction network.

    Snapshots are put in a canonical order first, so the result depends on
    the set of snapshots and the seed but not on their order. Every
    ``check_interval`` epochs the graph is binarized; training stops once it
    has stayed the same for ``early_stop_window`` epochs, or at
    ``max_epochs``.
    """
    if ground_truth is not None and ground_truth.n != snapshots.n:
        raise ValueError("ground truth graph size does not match the snapshots")
    start = time.perf_counter()
    data = snapshots.canonical()
    X_all = data.one_hot()
    m, n, s = X_all.shape
    rg, net = _init(n, s, cfg.seed, cfg.v0)
    params = {"C": rg.C, **net.params()}
    adam = AdamState()
    report = TrainReport()
    same_needed = cfg.early_stop_window // cfg.check_interval

    for epoch in range(cfg.max_epochs):
        rg.v = sharpness_at(epoch, cfg)
        total = 0.0
        for idx in batch_indices(m, cfg.batch_size, _epoch_seed(cfg.seed, epoch)):
            X = X_all[idx]
            out = forward_dense(relaxed_adjacency(rg), net, X)
            total += prediction_loss(out, X)
            grads = backward(rg, net, out)
            adam_step(params, grads, adam, cfg.lr, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps)
        report.epochs.append(epoch)
        report.losses.append(total)
        report.sharpness.append(rg.v)

        if (epoch + 1) % cfg.check_interval == 0:
            g = binarize(relaxed_adjacency(rg))
            report.checks.append((epoch, g))
            if ground_truth is not None:
                report.graph_losses[epoch] = graph_loss(g, ground_truth)
            if callback is not None:
                callback(epoch, total, g)
            log.debug("epoch %d loss %.4f v %.1f graph loss %s", epoch, total, rg.v,
                      report.graph_losses.get(epoch))
            recent = report.checks[-(same_needed + 1):]
            if len(recent) == same_needed + 1 and all(c[1] == g for c in recent):
                report.stopped_early = True
                break

    report.final_graph = binarize(relaxed_adjacency(rg))
    report.runtime_s = time.perf_counter() - start
    return rg, net, report


def train_weights_fixed_graph(snapshots: SnapshotSet, fixed: Graph, cfg: TrainConfig = TrainConfig(),
                              max_epochs: int = 2000) -> tuple[PredictionNet, float]:
    """Fit only the prediction network on a fixed binary graph.

    The counting vectors are computed once from the exact 0/1 adjacency.
    Stops at ``max_epochs`` or when the epoch loss improved by less than
    ``plateau_tol`` (relative) over ``plateau_window`` epochs. Returns the
    network and its prediction loss on the full snapshot set.
    """
    if fixed.n != snapshots.n:
        raise ValueError("graph size does not match the snapshots")
    data = snapshots.canonical()
    X_all = data.one_hot()
    m, n, s = X_all.shape
    M_all = fixed.adj.astype(float) @ X_all
    _, net = _init(n, s, cfg.seed, cfg.v0)
    params = net.params()
    adam = AdamState()
    history = []
    for epoch in range(max_epochs):
        total = 0.0
        for idx in batch_indices(m, cfg.batch_size, _epoch_seed(cfg.seed, epoch)):
            out = predict_from_counts(net, M_all[idx])
            out.cache["X"] = X_all[idx]
            total += prediction_loss(out, X_all[idx])
            adam_step(params, backward(None, net, out), adam, cfg.lr,
                      cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps)
        history.append(total)
        w = cfg.plateau_window
        if len(history) > w and history[-w - 1] - total < cfg.plateau_tol * abs(history[-w - 1]):
            break
    final = prediction_loss(predict_from_counts(net, M_all), X_all)
    return net, final


# --------------------------------------------------------------------------
# many fixed graphs at once
#
# Weight-only training of many candidate graphs on the same snapshots is the
# inner loop of the loss-landscape experiment. Every candidate starts from the
# same initialization and sees the same batch order, so the runs can be stacked
# along a leading candidate axis K and advanced together. With a binary graph
# a counting vector is an integer vector with entries below n, so the shared
# layers only ever see n**s distinct inputs: they are evaluated once on that
# table and gathered (forward) or scatter-added (backward) per row.

_MAX_TABLE = 100_000


# reductions here avoid BLAS so that a candidate's numbers do not depend on
# how many other candidates share the arrays (kernel choice varies with size)

def _lastsum(x):
    out = x[..., 0].copy()
    for j in range(1, x.shape[-1]):
        out += x[..., j]
    return out


def _softmax(z):
    top = z[..., 0].copy()
    for j in range(1, z.shape[-1]):
        np.maximum(top, z[..., j], out=top)
    e = np.exp(z - top[..., None])
    return e / _lastsum(e)[..., None]


def _softmax_back(p, g):
    return p * (g - _lastsum(g * p)[..., None])


def _count_table(n, s):
    """All integer vectors with entries in [0, n); row c has base-n digits of c."""
    V = n ** s
    return ((np.arange(V)[:, None] // n ** np.arange(s)) % n).astype(float), n ** np.arange(s)


def _node_layer(o3, W4, b4):
    """Per-node ``o3 @ W4[i] + b4[i]`` for o3 (K, b, n, s), W4 (K, n, s, s); s is tiny."""
    z = b4[:, None].copy() + o3[..., :1] * W4[:, None, :, 0, :]
    for j in range(1, o3.shape[-1]):
        z += o3[..., j:j + 1] * W4[:, None, :, j, :]
    return z


def _stacked_forward(P, codes, table):
    """Forward pass for K graphs given their counting-vector codes (K, b, n)."""
    K, b, n = codes.shape
    V, s = table.shape
    z1 = table @ P["W1"] + P["b1"][:, None]                         # (K, V, H)
    h1 = np.maximum(z1, 0.0)
    z2 = h1 @ P["W2"] + P["b2"][:, None]
    h2 = np.maximum(z2, 0.0)
    o3t = _softmax(h2 @ P["W3"] + P["b3"][:, None])                 # (K, V, s)
    flat = (codes + V * np.arange(K)[:, None, None]).reshape(-1)
    o3 = o3t.reshape(K * V, s)[flat].reshape(K, b, n, s)
    return _softmax(_node_layer(o3, P["W4"], P["b4"])), (flat, z1, h1, z2, h2, o3t, o3)


def _stacked_backward(P, X, o4, cache, table):
    flat, z1, h1, z2, h2, o3t, o3 = cache
    K, b, n, s = o4.shape
    V = len(table)
    dz4 = _softmax_back(o4, 2.0 * (o4 - X[None]) / s)
    grads = {"W4": np.stack([np.stack([(o3[..., j] * dz4[..., k]).sum(axis=1) for k in range(s)], axis=-1)
                             for j in range(s)], axis=2),
             "b4": dz4.sum(axis=1)}
    do3 = dz4[..., :1] * P["W4"][:, None, :, :, 0]
    for k in range(1, s):
        do3 = do3 + dz4[..., k:k + 1] * P["W4"][:, None, :, :, k]
    do3 = do3.reshape(-1, s)
    do3t = np.stack([np.bincount(flat, weights=do3[:, j], minlength=K * V) for j in range(s)],
                    axis=-1).reshape(K, V, s)
    dz3 = _softmax_back(o3t, do3t)
    grads["W3"] = h2.transpose(0, 2, 1) @ dz3
    grads["b3"] = dz3.sum(axis=1)
    dz2 = (dz3 @ P["W3"].transpose(0, 2, 1)) * (z2 > 0)
    grads["W2"] = h1.transpose(0, 2, 1) @ dz2
    grads["b2"] = dz2.sum(axis=1)
    dz1 = (dz2 @ P["W2"].transpose(0, 2, 1)) * (z1 > 0)
    grads["W1"] = table.T @ dz1
    grads["b1"] = dz1.sum(axis=1)
    return grads


def _sq_error(o4, X, s):
    d = (o4 - X[None]).reshape(o4.shape[0], -1)
    return (d * d).sum(axis=1) / s


def train_weights_fixed_graphs(snapshots: SnapshotSet, graphs, cfg: TrainConfig = TrainConfig(),
                               max_epochs: int = 2000, eval_chunk: int = 1000) -> list[float]:
    """Final prediction loss of weight-only training on each of ``graphs``.

    Same schedule, initialization and plateau rule as
    :func:`train_weights_fixed_graph`; candidates that reach their plateau
    are frozen while the others keep training. Meant for small graphs: the
    table of possible counting vectors has ``n**s`` rows.
    """
    graphs = list(graphs)
    if not graphs:
        return []
    if any(g.n != snapshots.n for g in graphs):
        raise ValueError("graph size does not match the snapshots")
    data = snapshots.canonical()
    X_all = data.one_hot()
    m, n, s = X_all.shape
    if n ** s > _MAX_TABLE:
        raise ValueError(f"n**s = {n ** s} counting vectors is too many; train graphs one at a time")
    table, radix = _count_table(n, s)
    A_all = np.stack([g.adj.astype(float) for g in graphs])
    idx_dtype = np.int16 if n ** s <= np.iinfo(np.int16).max else np.int32
    codes_all = np.stack([np.rint(A @ X_all).astype(np.int64) @ radix for A in A_all]).astype(idx_dtype)
    _, net = _init(n, s, cfg.seed, cfg.v0)
    K = len(graphs)
    params = {k: np.repeat(v[None], K, axis=0) for k, v in net.params().items()}
    final = {k: np.empty_like(v) for k, v in params.items()}
    active = np.arange(K)
    adam = AdamState()
    history = []
    w = cfg.plateau_window
    for epoch in range(max_epochs):
        total = np.zeros(len(active))
        codes_active = codes_all[active]
        for idx in batch_indices(m, cfg.batch_size, _epoch_seed(cfg.seed, epoch)):
            X = X_all[idx]
            o4, cache = _stacked_forward(params, codes_active[:, idx].astype(np.int64), table)
            total += _sq_error(o4, X, s)
            adam_step(params, _stacked_backward(params, X, o4, cache, table), adam, cfg.lr,
                      cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps)
        history.append(total)
        if len(history) > w:
            before = history[-w - 1]
            done = before - total < cfg.plateau_tol * np.abs(before)
            if done.any():
                for key in params:
                    final[key][active[done]] = params[key][done]
                keep = ~done
                active = active[keep]
                params = {k: v[keep] for k, v in params.items()}
                adam.m = {k: v[keep] for k, v in adam.m.items()}
                adam.v = {k: v[keep] for k, v in adam.v.items()}
                history = [h[keep] for h in history]
                if not len(active):
                    break
    for key in params:
        final[key][active] = params[key]
    losses = np.zeros(K)
    for lo in range(0, m, eval_chunk):
        X = X_all[lo:lo + eval_chunk]
        o4, _ = _stacked_forward(final, codes_all[:, lo:lo + eval_chunk].astype(np.int64), table)
        losses += _sq_error(o4, X, s)
    return losses.tolist()
