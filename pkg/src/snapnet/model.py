"""Relaxed graph layer, neighborhood counting and the prediction network.

Shapes follow a row-vector convention: a batch of snapshots ``X`` is
``(b, n, s)``; the counting layer gives ``M = A @ X`` of the same shape and
the prediction MLP maps every row ``M[k, i]`` to a distribution over the
``s`` states of node ``i``::

    o1 = relu(m @ W1 + b1)            # shared, s -> 10
    o2 = relu(o1 @ W2 + b2)           # shared, 10 -> 10
    o3 = softmax(o2 @ W3 + b3)        # shared, 10 -> s
    o4 = softmax(o3 @ W4[i] + b4[i])  # node-specific, s -> s
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import expit

from .errors import DataError

HIDDEN = 10


def sharpen(x, v: float):
    """Sigmoid gate ``f((f(x) - 0.5) * v)`` with ``f`` the logistic function.

    Its range at sharpness ``v`` is ``(f(-v/2), f(v/2))``, so entries only
    approach {0, 1} as ``v`` grows.
    """
    if v <= 0:
        raise ValueError(f"sharpness must be positive, got {v}")
    return expit((expit(x) - 0.5) * v)


def sharpen_grad(x, v: float):
    """Derivative of :func:`sharpen` with respect to ``x``."""
    fx = expit(x)
    g = expit((fx - 0.5) * v)
    return g * (1.0 - g) * v * fx * (1.0 - fx)


@dataclass
class RelaxedGraph:
    """Upper-triangular edge logits ``C`` and the gate sharpness ``v``.

    Only the strictly upper triangle of ``C`` is meaningful; the rest is
    kept at zero.
    """

    C: np.ndarray
    v: float = 5.0

    def __post_init__(self):
        C = np.array(self.C, dtype=float)
        if C.ndim != 2 or C.shape[0] != C.shape[1]:
            raise DataError(f"C must be square, got {C.shape}")
        if self.v <= 0:
            raise ValueError("sharpness must be positive")
        self.C = np.triu(C, 1)

    @property
    def n(self) -> int:
        return self.C.shape[0]

    @classmethod
    def init(cls, n: int, rng, v: float = 5.0, scale: float = 0.1) -> "RelaxedGraph":
        return cls(rng.uniform(-scale, scale, size=(n, n)), v)

    @classmethod
    def from_graph(cls, graph, v: float = 5.0, magnitude: float = 20.0) -> "RelaxedGraph":
        """Logits of ``+magnitude`` on edges and ``-magnitude`` elsewhere."""
        C = np.where(graph.adj > 0, magnitude, -magnitude).astype(float)
        return cls(C, v)

    def symmetric(self) -> np.ndarray:
        return self.C + self.C.T


def relaxed_adjacency(rg: RelaxedGraph) -> np.ndarray:
    """Symmetric ``n x n`` matrix in [0, 1] with zero diagonal."""
    A = sharpen(rg.symmetric(), rg.v)
    np.fill_diagonal(A, 0.0)
    return A


def counting_layer(A, X) -> np.ndarray:
    """Neighborhood counting vectors ``A @ X`` for one (n, s) or many (b, n, s) snapshots."""
    A = np.asarray(A)
    X = np.asarray(X)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or X.shape[-2] != A.shape[0]:
        raise DataError(f"shape mismatch: A {A.shape}, X {X.shape}")
    return A @ X


def _relu(x):
    return np.maximum(x, 0.0)


def rowsum(x):
    """Sum over the (short) last axis; a matrix-vector product beats ``sum`` here."""
    return x @ np.ones(x.shape[-1])


def _rowmax(x):
    out = x[..., 0].copy()
    for j in range(1, x.shape[-1]):
        np.maximum(out, x[..., j], out=out)
    return out


def row_softmax(z):
    e = np.exp(z - _rowmax(z)[..., None])
    return e / rowsum(e)[..., None]


@dataclass
class PredictionNet:
    """Shared MLP ``W1..W3`` plus one ``s x s`` output layer per node (``W4``, ``b4``)."""

    W1: np.ndarray
    b1: np.ndarray
    W2: np.ndarray
    b2: np.ndarray
    W3: np.ndarray
    b3: np.ndarray
    W4: np.ndarray
    b4: np.ndarray

    PARAMS = ("W1", "b1", "W2", "b2", "W3", "b3", "W4", "b4")

    @property
    def n(self) -> int:
        return self.W4.shape[0]

    @property
    def s(self) -> int:
        return self.W1.shape[0]

    @classmethod
    def init(cls, n: int, s: int, rng, noise: float = 0.01) -> "PredictionNet":
        """PyTorch-style uniform(+-1/sqrt(fan_in)) shared layers; W4 near identity."""

        def layer(fan_in, fan_out):
            bound = 1.0 / np.sqrt(fan_in)
            return (rng.uniform(-bound, bound, size=(fan_in, fan_out)),
                    rng.uniform(-bound, bound, size=fan_out))

        W1, b1 = layer(s, HIDDEN)
        W2, b2 = layer(HIDDEN, HIDDEN)
        W3, b3 = layer(HIDDEN, s)
        W4 = np.eye(s)[None] + rng.uniform(-noise, noise, size=(n, s, s))
        b4 = rng.uniform(-noise, noise, size=(n, s))
        return cls(W1, b1, W2, b2, W3, b3, W4, b4)

    def params(self) -> dict:
        return {k: getattr(self, k) for k in self.PARAMS}

    def copy(self) -> "PredictionNet":
        return PredictionNet(**{k: v.copy() for k, v in self.params().items()})


@dataclass
class ModelOutput:
    predictions: np.ndarray  # (b, n, s), rows sum to one
    cache: dict = field(default_factory=dict, repr=False)


def predict_from_counts(net: PredictionNet, M) -> ModelOutput:
    """Run the prediction layer on counting vectors ``M`` of shape (b, n, s)."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 3 or M.shape[1:] != (net.n, net.s):
        raise DataError(f"counting vectors must have shape (b, {net.n}, {net.s}), got {M.shape}")
    b, n, s = M.shape
    m = M.reshape(b * n, s)
    z1 = m @ net.W1 + net.b1
    h1 = _relu(z1)
    z2 = h1 @ net.W2 + net.b2
    h2 = _relu(z2)
    o3 = row_softmax(h2 @ net.W3 + net.b3).reshape(b, n, s)
    # per-node output layer as a stacked (n, b, s) @ (n, s, s) product
    z4 = np.matmul(o3.transpose(1, 0, 2), net.W4).transpose(1, 0, 2) + net.b4
    o4 = row_softmax(z4)
    cache = {"m": m, "z1": z1, "h1": h1, "z2": z2, "h2": h2, "o3": o3}
    return ModelOutput(o4, cache)


def forward_dense(A, net: PredictionNet, X) -> ModelOutput:
    """Forward pass for an explicit (relaxed or binary) adjacency ``A``."""
    X = np.asarray(X, dtype=float)
    single = X.ndim == 2
    if single:
        X = X[None]
    if X.shape[1:] != (net.n, net.s):
        raise DataError(f"snapshots must have shape (b, {net.n}, {net.s}), got {X.shape}")
    out = predict_from_counts(net, counting_layer(A, X))
    out.cache["A"] = A
    out.cache["X"] = X
    if single:
        out.predictions = out.predictions[0]
        out.cache["single"] = True
    return out


def forward(rg: RelaxedGraph, net: PredictionNet, X) -> ModelOutput:
    if rg.n != net.n:
        raise DataError(f"graph has {rg.n} nodes but network has {net.n}")
    return forward_dense(relaxed_adjacency(rg), net, X)


def prediction_loss(output, X) -> float:
    """Row-wise MSE (mean over states), summed over nodes and snapshots."""
    P = output.predictions if isinstance(output, ModelOutput) else np.asarray(output)
    X = np.asarray(X, dtype=float)
    if P.shape != X.shape:
        raise DataError(f"prediction shape {P.shape} does not match target {X.shape}")
    return float(np.sum((P - X) ** 2) / X.shape[-1])


def export_prediction_surface(net: PredictionNet, node: int, max_degree: int = 10) -> np.ndarray:
    """Probability of state 0 for every integer counting vector of degree <= ``max_degree``.

    Returns rows ``(m0, m1, p0)`` ordered by degree, then by ``m1``.
    """
    if net.s != 2:
        raise ValueError(f"prediction surfaces need a 2-state model, got s={net.s}")
    if not 0 <= node < net.n:
        raise ValueError(f"node {node} out of range")
    grid = np.array([(d - k, k) for d in range(max_degree + 1) for k in range(d + 1)], dtype=float)
    M = np.zeros((len(grid), net.n, 2))
    M[:, node] = grid
    p0 = predict_from_counts(net, M).predictions[:, node, 0]
    return np.column_stack([grid, p0])


# --------------------------------------------------------------------------
# checkpoints


def _fmt(x: float) -> str:
    return repr(float(x))


def save_checkpoint(path, rg: RelaxedGraph, net: PredictionNet) -> None:
    """Text checkpoint: ``[name] shape...`` followed by one value per line."""
    lines = ["# snapnet checkpoint v1", "[v]", _fmt(rg.v)]
    for name, arr in [("C", rg.C), *net.params().items()]:
        lines.append(f"[{name}] " + " ".join(map(str, arr.shape)))
        lines.extend(_fmt(x) for x in arr.ravel())
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n")


def load_checkpoint(path) -> tuple[RelaxedGraph, PredictionNet]:
    lines = Path(path).read_text().splitlines()
    arrays, k = {}, 0
    v = None
    while k < len(lines):
        ln = lines[k].strip()
        k += 1
        if not ln or ln.startswith("#"):
            continue
        if not ln.startswith("["):
            raise DataError(f"expected a section header, got {ln!r}", line=k)
        name, _, shape_txt = ln[1:].partition("]")
        try:
            if name == "v":
                v = float(lines[k])
                k += 1
                continue
            shape = tuple(int(t) for t in shape_txt.split())
            size = int(np.prod(shape))
            arrays[name] = np.array([float(x) for x in lines[k:k + size]]).reshape(shape)
        except (ValueError, IndexError):
            raise DataError(f"malformed section [{name}]", line=k) from None
        k += size
    missing = {"C", *PredictionNet.PARAMS} - set(arrays)
    if v is None or missing:
        raise DataError(f"checkpoint incomplete, missing {sorted(missing | ({'v'} if v is None else set()))}")
    return RelaxedGraph(arrays.pop("C"), v), PredictionNet(**arrays)
