from itertools import combinations

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from snapnet.errors import ConfigError, DataError
from snapnet.graphs import (Graph, GraphGenSpec, binarize, enumerate_connected, generate, graph_loss,
                            preset, read_edgelist, write_edgelist)


def brute_force_connected_count(n):
    """Independent oracle: networkx connectivity over every upper-triangular mask."""
    pairs = list(combinations(range(n), 2))
    count = 0
    for mask in range(1 << len(pairs)):
        g = nx.Graph()
        g.add_nodes_from(range(n))
        g.add_edges_from(p for b, p in enumerate(pairs) if mask >> b & 1)
        count += nx.is_connected(g)
    return count


@st.composite
def graphs(draw, n=None):
    n = n or draw(st.integers(2, 9))
    bits = draw(st.lists(st.booleans(), min_size=n * (n - 1) // 2, max_size=n * (n - 1) // 2))
    return Graph.from_edges(n, [p for b, p in zip(bits, combinations(range(n), 2)) if b])


def test_grid_matches_benchmark_size():
    g = generate(preset("Grid2D"))
    assert (g.n, g.n_edges) == (100, 180)


def test_bull():
    g = generate(GraphGenSpec("Bull", shuffle=False))
    assert (g.n, g.n_edges) == (5, 5)
    assert g.edges() == [(0, 1), (0, 2), (0, 3), (1, 2), (1, 4)]


@pytest.mark.parametrize("family,n,m", [("ER", 25, 44), ("Geometric", 200, 846),
                                        ("WattsStrogatzNewman", 50, 113), ("Grid2D", 100, 180)])
def test_benchmark_presets(family, n, m):
    g = generate(preset(family))
    assert (g.n, g.n_edges) == (n, m)
    assert g.is_connected()
    assert np.array_equal(g.adj, g.adj.T) and not np.diag(g.adj).any()


def test_er_without_edges_is_rejected():
    with pytest.raises(ConfigError):
        generate(GraphGenSpec("ER", {"n": 25, "p": 0.0}, seed=1))


def test_disconnected_draw_retries_next_seed():
    spec = GraphGenSpec("ER", {"n": 12, "p": 0.2}, seed=0)
    g = generate(spec)
    assert g.is_connected()
    assert g.meta["seed"] >= 0


def test_generation_is_deterministic():
    a = generate(preset("ER", seed=7))
    b = generate(preset("ER", seed=7))
    assert a == b
    assert sorted(a.meta["perm"]) == list(range(a.n))


def test_shuffle_relabels_nodes():
    plain = generate(preset("WattsStrogatzNewman", shuffle=False))
    shuffled = generate(preset("WattsStrogatzNewman"))
    assert plain != shuffled
    assert nx.is_isomorphic(plain.to_networkx(), shuffled.to_networkx())


@pytest.mark.parametrize("params", [{"n": 25, "p": 1.5}, {"n": 0, "p": 0.1}, {"p": 0.1}])
def test_invalid_parameters(params):
    with pytest.raises(ConfigError):
        generate(GraphGenSpec("ER", params))


def test_unknown_family():
    with pytest.raises(ConfigError):
        generate(GraphGenSpec("Lattice3D"))


def test_graph_loss_examples():
    bull = generate(GraphGenSpec("Bull", shuffle=False))
    assert graph_loss(bull, bull) == 0
    assert graph_loss(Graph.empty(5), Graph.complete(5)) == 10
    minus = Graph.from_edges(5, [e for e in bull.edges() if e != (0, 1)])
    assert graph_loss(bull, minus) == 1


def test_graph_loss_size_mismatch():
    with pytest.raises(DataError):
        graph_loss(Graph.empty(3), Graph.empty(4))


@settings(max_examples=60, deadline=None)
@given(st.data())
def test_graph_loss_is_a_metric(data):
    n = data.draw(st.integers(2, 8))
    a, b, c = (data.draw(graphs(n)) for _ in range(3))
    assert graph_loss(a, b) == graph_loss(b, a)
    assert (graph_loss(a, b) == 0) == (a == b)
    assert graph_loss(a, c) <= graph_loss(a, b) + graph_loss(b, c)


@settings(max_examples=40, deadline=None)
@given(graphs(), st.integers(0, 2**32 - 1))
def test_permutation_preserves_degrees(g, seed):
    perm = np.random.default_rng(seed).permutation(g.n)
    h = g.permute(perm)
    assert sorted(h.degrees()) == sorted(g.degrees())
    assert np.array_equal(h.degrees()[perm], g.degrees())


@pytest.mark.parametrize("n,expected", [(1, 1), (2, 1), (3, 4), (4, 38), (5, 728)])
def test_enumerate_connected_counts(n, expected):
    got = enumerate_connected(n)
    assert len(got) == expected
    assert len(set(got)) == expected
    assert all(g.is_connected() for g in got)
    if n >= 2:
        assert expected == brute_force_connected_count(n)


def test_enumerate_connected_order_is_deterministic():
    assert enumerate_connected(4) == enumerate_connected(4)


def test_enumerate_refuses_large_n():
    with pytest.raises(ConfigError):
        enumerate_connected(7)


def test_binarize():
    assert binarize(np.zeros((4, 4))) == Graph.empty(4)
    r = np.zeros((3, 3))
    r[0, 2] = r[2, 0] = 0.9
    assert binarize(r).edges() == [(0, 2)]
    r[0, 2] = r[2, 0] = 0.5
    assert binarize(r, 0.5) == Graph.empty(3)


def test_edgelist_round_trip(tmp_path):
    g = generate(preset("ER"))
    write_edgelist(g, tmp_path / "g.txt")
    text = (tmp_path / "g.txt").read_text().splitlines()
    assert text[0] == "25 44"
    assert text[1:] == sorted(text[1:], key=lambda ln: tuple(map(int, ln.split())))
    assert read_edgelist(tmp_path / "g.txt") == g


@pytest.mark.parametrize("content", ["", "3 2\n0 1\n", "3 1\n0 5\n", "3 1\n1 1\n", "x y\n"])
def test_edgelist_parse_errors(tmp_path, content):
    path = tmp_path / "bad.txt"
    path.write_text(content)
    with pytest.raises(DataError):
        read_edgelist(path)


def test_graph_validation():
    with pytest.raises(DataError):
        Graph(np.array([[0, 1], [0, 0]]))
    with pytest.raises(DataError):
        Graph(np.eye(2, dtype=int))
