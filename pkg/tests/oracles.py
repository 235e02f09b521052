"""Independent reference computations shared by the unit and acceptance tests."""

import numpy as np
from scipy.stats import spearmanr

from snapnet.dynamics import DynamicsSpec, SimConfig, sample_snapshots
from snapnet.graphs import Graph
from snapnet.model import PredictionNet, RelaxedGraph, forward, prediction_loss
from snapnet.snapshots import one_hot
from snapnet.train import backward


def random_problem(n, s, seed, b=6):
    rng = np.random.default_rng(seed)
    rg = RelaxedGraph.init(n, rng, v=5.0, scale=2.0)
    net = PredictionNet.init(n, s, rng, noise=0.5)
    X = one_hot(rng.integers(0, s, size=(b, n)), s)
    return rg, net, X


def _relu_pattern(output):
    return (output.cache["z1"] > 0, output.cache["z2"] > 0)


def gradient_check(n, s, seed, coords=100, h=1e-4):
    """Worst relative error of analytic vs central-difference gradients per tensor.

    Coordinates of ``C`` are drawn from its upper triangle, where the
    parameters live. A coordinate whose +-h step flips a ReLU unit straddles a
    kink where central differences are meaningless; it is redrawn and counted
    in ``skipped``. The relative error uses ``max(|a|, |fd|, 1e-6)`` as
    denominator so exact zeros do not divide by zero.
    """
    rg, net, X = random_problem(n, s, seed)
    base = forward(rg, net, X)
    pattern = _relu_pattern(base)
    grads = backward(rg, net, base)
    tensors = {"C": rg.C, **net.params()}
    rng = np.random.default_rng(seed + 1000)
    iu = np.triu_indices(n, 1)
    worst, skipped = {}, 0
    for name, arr in tensors.items():
        err, done = 0.0, 0
        while done < coords:
            if name == "C":
                p = rng.integers(0, len(iu[0]))
                ix = (iu[0][p], iu[1][p])
            else:
                ix = tuple(rng.integers(0, d) for d in arr.shape)
            old = arr[ix]
            arr[ix] = old + h
            up = forward(rg, net, X)
            arr[ix] = old - h
            down = forward(rg, net, X)
            arr[ix] = old
            if any(not np.array_equal(a, b) for o in (up, down) for a, b in zip(_relu_pattern(o), pattern)):
                skipped += 1
                if skipped > 10 * coords:
                    raise RuntimeError("too many coordinates sit on ReLU kinks")
                continue
            fd = (prediction_loss(up, X) - prediction_loss(down, X)) / (2 * h)
            a = grads[name][ix]
            err = max(err, abs(a - fd) / max(abs(a), abs(fd), 1e-6))
            done += 1
        worst[name] = err
    worst["skipped"] = skipped
    return worst


def direct_neighbor_counts(graph, states, s):
    """Count neighbor states by walking the edge list once."""
    M = np.zeros((graph.n, s), dtype=np.int64)
    for i, j in graph.edges():
        M[i, states[j]] += 1
        M[j, states[i]] += 1
    return M


def spearman(x, y):
    return float(spearmanr(x, y).statistic)


# --------------------------------------------------------------------------
# stochastic node dynamics, written out by hand with default parameters

STOCHASTIC = ("SIS", "InvVoter", "MajorityFlip", "RPS", "ForestFire")


def hand_rates(model, state, m):
    """Outgoing (target, rate) written out from the model definitions with default parameters."""
    if model == "SIS":  # S=0, I=1; mu=2, beta=1, eps=0.1
        return (1, 1.0 * m[1] + 0.1) if state == 0 else (0, 2.0 + 0.1)
    if model == "InvVoter":
        return (1, m[0] + 0.01) if state == 0 else (0, m[1] + 0.01)
    if model == "MajorityFlip":
        d = m[0] + m[1]
        frac = m[0] / d if d else None
        if state == 0:
            ind = frac is not None and (frac < 0.2 or frac > 0.8)
        else:
            ind = frac is not None and (frac < 0.3 or frac > 0.7)
        return 1 - state, float(ind) + 0.01
    if model == "RPS":  # R -> P at m[P], P -> S at m[S], S -> R at m[R]
        return {0: (1, m[1] + 0.01), 1: (2, m[2] + 0.01), 2: (0, m[0] + 0.01)}[state]
    if model == "ForestFire":  # E=0, T=1, F=2
        return {1: (2, 0.1 + 2.0 * m[2] + 0.1), 2: (0, 2.0 + 0.1), 0: (1, 1.0 + 0.1)}[state]
    raise ValueError(model)


# pinned neighbors give every model a single free node whose chain has one
# exit per state; for such chains the stationary law is proportional to 1/rate
NEIGHBORHOODS = {
    "SIS": [(0, 0), (2, 1), (0, 3)],
    "InvVoter": [(1, 0), (2, 2), (0, 3)],
    "MajorityFlip": [(9, 1), (5, 5), (3, 7), (1, 0)],
    "RPS": [(0, 0, 0), (1, 2, 0), (0, 1, 3)],
    "ForestFire": [(0, 0, 0), (1, 1, 1), (0, 2, 0)],
}


def frozen_neighborhood_check(model, counts, m, seed):
    """Simulate one free node whose neighbors are pinned to give ``counts``.

    With one exit per state the free node's stationary law is proportional
    to the inverse exit rates. Returns the empirical and exact laws and the
    largest deviation in binomial standard errors.
    """
    k = int(sum(counts))
    graph = Graph.from_edges(k + 1, [(0, j) for j in range(1, k + 1)]) if k else Graph.empty(1)
    states = [s for s, c in enumerate(counts) for _ in range(c)]
    pinned = {j + 1: s for j, s in enumerate(states)}
    spec = DynamicsSpec(model)
    snaps = sample_snapshots(graph, spec, SimConfig(seed=seed, burn_in_events=40), m, pinned=pinned)
    inv = np.array([1.0 / hand_rates(model, s, np.array(counts, float))[1] for s in range(spec.n_states)])
    p = inv / inv.sum()
    freq = np.bincount(snaps.data[:, 0], minlength=spec.n_states) / m
    z = np.abs(freq - p) / np.sqrt(p * (1 - p) / m)
    return {"model": model, "counts": counts, "freq": freq, "exact": p, "max_z": float(z.max()),
            "pinned_held": all((snaps.data[:, j] == s).all() for j, s in pinned.items())}
