"""Undirected simple graphs, benchmark generators and graph distances.

Graphs are stored as dense binary adjacency matrices. The generators wrap
networkx so that the benchmark instances (e.g. ``erdos_renyi_graph(25, 0.15,
seed=43)``) match the networkx calls edge for edge; node ids are shuffled
afterwards so labels carry no information about connectivity.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path

import networkx as nx
import numpy as np

from .errors import ConfigError, DataError

log = logging.getLogger(__name__)

FAMILIES = ("ER", "Geometric", "WattsStrogatzNewman", "Grid2D", "Bull", "Custom")
MAX_ENUMERATE = 6
MAX_CONNECT_RETRIES = 100


@dataclass(frozen=True, eq=False)
class Graph:
    """Binary symmetric adjacency matrix without self-loops."""

    adj: np.ndarray
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        a = np.asarray(self.adj)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise DataError(f"adjacency must be square, got shape {a.shape}")
        if not np.isin(a, (0, 1)).all():
            raise DataError("adjacency entries must be 0 or 1")
        if not np.array_equal(a, a.T):
            raise DataError("adjacency must be symmetric")
        if np.any(np.diag(a)):
            raise DataError("self-loops are not allowed")
        a = a.astype(np.uint8)
        a.setflags(write=False)
        object.__setattr__(self, "adj", a)

    @property
    def n(self) -> int:
        return self.adj.shape[0]

    @property
    def n_edges(self) -> int:
        return int(np.triu(self.adj, 1).sum())

    def edges(self) -> list[tuple[int, int]]:
        """Edges ``(i, j)`` with ``i < j`` in lexicographic order."""
        i, j = np.nonzero(np.triu(self.adj, 1))
        return list(zip(i.tolist(), j.tolist()))

    def degrees(self) -> np.ndarray:
        return self.adj.sum(axis=1).astype(int)

    def neighbors(self, i: int) -> np.ndarray:
        return np.flatnonzero(self.adj[i])

    def is_connected(self) -> bool:
        return _connected(self.n, self.edges())

    def permute(self, perm) -> "Graph":
        """Relabel nodes so that old node ``i`` becomes ``perm[i]``."""
        perm = np.asarray(perm)
        inv = np.argsort(perm)
        return Graph(self.adj[np.ix_(inv, inv)], meta=dict(self.meta))

    def to_networkx(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(range(self.n))
        g.add_edges_from(self.edges())
        return g

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return np.array_equal(self.adj, other.adj)

    def __hash__(self):
        return hash((self.n, np.packbits(self.adj).tobytes()))

    def __repr__(self):
        return f"Graph(n={self.n}, edges={self.n_edges})"

    @classmethod
    def from_edges(cls, n: int, edges, meta=None) -> "Graph":
        adj = np.zeros((n, n), dtype=np.uint8)
        for i, j in edges:
            if i == j:
                raise DataError(f"self-loop on node {i}")
            if not (0 <= i < n and 0 <= j < n):
                raise DataError(f"edge ({i}, {j}) out of range for n={n}")
            adj[i, j] = adj[j, i] = 1
        return cls(adj, meta=meta or {})

    @classmethod
    def empty(cls, n: int) -> "Graph":
        return cls(np.zeros((n, n), dtype=np.uint8))

    @classmethod
    def complete(cls, n: int) -> "Graph":
        return cls(np.ones((n, n), dtype=np.uint8) - np.eye(n, dtype=np.uint8))


@dataclass(frozen=True)
class GraphGenSpec:
    """Recipe for a generated graph.

    ``params`` keys per family: ER ``n, p``; Geometric ``n, radius``;
    WattsStrogatzNewman ``n, k, p``; Grid2D ``rows, cols``; Bull none;
    Custom ``n, edges``.
    """

    family: str
    params: dict = field(default_factory=dict)
    seed: int = 0
    shuffle: bool = True
    require_connected: bool = True


# The four benchmark instances plus the 5-node bull graph.
PRESETS = {
    "ER": GraphGenSpec("ER", {"n": 25, "p": 0.15}, seed=43),
    "Geometric": GraphGenSpec("Geometric", {"n": 200, "radius": 0.125}, seed=42),
    "WattsStrogatzNewman": GraphGenSpec("WattsStrogatzNewman", {"n": 50, "k": 4, "p": 0.15}, seed=42),
    "Grid2D": GraphGenSpec("Grid2D", {"rows": 10, "cols": 10}, seed=42),
    "Bull": GraphGenSpec("Bull", {}, seed=42),
}
ALIASES = {
    "er": "ER", "geom": "Geometric", "geometric": "Geometric",
    "ws": "WattsStrogatzNewman", "wattsstrogatznewman": "WattsStrogatzNewman",
    "grid": "Grid2D", "grid2d": "Grid2D", "bull": "Bull", "custom": "Custom",
}


def canonical_family(name: str) -> str:
    try:
        return ALIASES[name.lower()]
    except KeyError:
        raise ConfigError(f"unknown graph family {name!r}; choose from {FAMILIES}") from None


def preset(name: str, **overrides) -> GraphGenSpec:
    """Benchmark spec by family name, with optional ``seed``/param overrides."""
    base = PRESETS[canonical_family(name)]
    seed = overrides.pop("seed", base.seed)
    shuffle = overrides.pop("shuffle", base.shuffle)
    return GraphGenSpec(base.family, {**base.params, **overrides}, seed=seed, shuffle=shuffle)


def _int_param(params, key, minimum=1):
    if key not in params:
        raise ConfigError(f"missing graph parameter {key!r}")
    value = params[key]
    if int(value) != value or value < minimum:
        raise ConfigError(f"graph parameter {key!r} must be an integer >= {minimum}, got {value!r}")
    return int(value)


def _prob_param(params, key):
    if key not in params:
        raise ConfigError(f"missing graph parameter {key!r}")
    value = float(params[key])
    if not 0.0 <= value <= 1.0:
        raise ConfigError(f"graph parameter {key!r} must lie in [0, 1], got {value}")
    return value


def _build(family: str, params: dict, seed: int) -> tuple[Graph, dict]:
    meta = {}
    if family == "ER":
        g = nx.erdos_renyi_graph(_int_param(params, "n"), _prob_param(params, "p"), seed=seed)
    elif family == "Geometric":
        n = _int_param(params, "n")
        radius = float(params.get("radius", -1))
        if radius <= 0:
            raise ConfigError("Geometric graph needs a positive radius")
        g = nx.random_geometric_graph(n, radius, seed=seed)
        pos = nx.get_node_attributes(g, "pos")
        meta["pos"] = np.array([pos[i] for i in range(n)])
        # networkx connects at distance <= radius; ties have probability zero
        g = nx.Graph([(i, j) for i, j in g.edges()
                      if np.hypot(*(meta["pos"][i] - meta["pos"][j])) < radius])
        g.add_nodes_from(range(n))
    elif family == "WattsStrogatzNewman":
        n, k = _int_param(params, "n"), _int_param(params, "k")
        if k >= n:
            raise ConfigError("WattsStrogatzNewman needs k < n")
        g = nx.newman_watts_strogatz_graph(n, k, _prob_param(params, "p"), seed=seed)
    elif family == "Grid2D":
        rows, cols = _int_param(params, "rows"), _int_param(params, "cols")
        g = nx.convert_node_labels_to_integers(nx.grid_2d_graph(rows, cols), ordering="sorted")
    elif family == "Bull":
        g = nx.Graph([(0, 1), (1, 2), (0, 2), (3, 0), (4, 1)])
    elif family == "Custom":
        n = _int_param(params, "n")
        return Graph.from_edges(n, params.get("edges", ())), meta
    else:
        raise ConfigError(f"unknown graph family {family!r}")
    n = g.number_of_nodes()
    return Graph.from_edges(n, g.edges()), meta


def generate(spec: GraphGenSpec) -> Graph:
    """Build the graph described by ``spec``.

    Disconnected draws are retried with ``seed + 1, seed + 2, ...`` (at most
    100 attempts) when ``spec.require_connected`` is set. The node-id
    permutation is drawn from the seed that produced the accepted graph.
    """
    family = canonical_family(spec.family)
    seed = int(spec.seed)
    for attempt in range(MAX_CONNECT_RETRIES):
        graph, meta = _build(family, spec.params, seed + attempt)
        if not spec.require_connected or graph.is_connected():
            break
        log.info("%s seed %d gave a disconnected graph, retrying", family, seed + attempt)
    else:
        raise ConfigError(
            f"no connected {family} graph within {MAX_CONNECT_RETRIES} seeds starting at {seed}")
    used = seed + attempt
    meta.update(family=family, params=dict(spec.params), seed=used)
    if spec.shuffle:
        perm = np.random.default_rng(used).permutation(graph.n)
        graph = graph.permute(perm)
        meta["perm"] = perm
        if "pos" in meta:
            meta["pos"] = meta["pos"][np.argsort(perm)]
    return Graph(graph.adj, meta=meta)


def graph_loss(a: Graph, b: Graph) -> int:
    """Number of edge insertions/deletions turning ``a`` into ``b``."""
    if a.n != b.n:
        raise DataError(f"graphs differ in size: {a.n} vs {b.n}")
    iu = np.triu_indices(a.n, 1)
    return int(np.sum(a.adj[iu] != b.adj[iu]))


def binarize(relaxed, threshold: float = 0.5) -> Graph:
    """Edge wherever the relaxed entry is strictly above ``threshold``."""
    r = np.asarray(relaxed, dtype=float)
    upper = np.triu(r > threshold, 1)
    return Graph((upper | upper.T).astype(np.uint8))


def _connected(n: int, edges) -> bool:
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    components = n
    for i, j in edges:
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[ri] = rj
            components -= 1
    return components <= 1


def enumerate_connected(n: int) -> list[Graph]:
    """All labeled connected simple graphs on ``n`` nodes.

    Candidate ``k`` corresponds to the bit mask ``k`` over the upper-triangular
    pairs in lexicographic order; connected masks are returned in increasing
    mask order.
    """
    if not 1 <= n <= MAX_ENUMERATE:
        raise ConfigError(f"enumeration limited to 1 <= n <= {MAX_ENUMERATE}, got {n}")
    pairs = list(combinations(range(n), 2))
    out = []
    for mask in range(1 << len(pairs)):
        edges = [p for bit, p in enumerate(pairs) if mask >> bit & 1]
        if _connected(n, edges):
            out.append(Graph.from_edges(n, edges))
    return out


def write_edgelist(graph: Graph, path) -> None:
    edges = graph.edges()
    lines = [f"{graph.n} {len(edges)}"] + [f"{i} {j}" for i, j in edges]
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n")


def read_edgelist(path) -> Graph:
    lines = [ln for ln in Path(path).read_text().splitlines() if ln.strip()]
    if not lines:
        raise DataError("empty graph file", line=1)
    try:
        n, m = (int(t) for t in lines[0].split())
    except ValueError:
        raise DataError(f"bad header {lines[0]!r}, expected 'n m'", line=1) from None
    if len(lines) - 1 != m:
        raise DataError(f"header announces {m} edges, found {len(lines) - 1}", line=1)
    edges = []
    for lineno, ln in enumerate(lines[1:], start=2):
        try:
            i, j = (int(t) for t in ln.split())
        except ValueError:
            raise DataError(f"bad edge line {ln!r}", line=lineno) from None
        if not (0 <= i < n and 0 <= j < n) or i == j:
            raise DataError(f"invalid edge ({i}, {j}) for n={n}", line=lineno)
        edges.append((i, j))
    return Graph.from_edges(n, edges)
