import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from snapnet.baselines import (METHODS, ScoreMatrix, correlation, mutual_information, node_series,
                               partial_correlation, threshold_top_k)
from snapnet.dynamics import DynamicsSpec, SimConfig, sample_snapshots
from snapnet.graphs import generate, graph_loss, preset
from snapnet.snapshots import SnapshotSet


def entropy_bits(counts):
    p = np.asarray(counts, float)
    p = p[p > 0] / p.sum()
    return float(-(p * np.log2(p)).sum())


def mi_by_entropies(a, b):
    """H(A) + H(B) - H(A, B) from explicit histograms."""
    joint = {}
    for pair in zip(a.tolist(), b.tolist()):
        joint[pair] = joint.get(pair, 0) + 1
    return (entropy_bits(np.unique(a, return_counts=True)[1]) + entropy_bits(np.unique(b, return_counts=True)[1])
            - entropy_bits(list(joint.values())))


def test_node_series_maps_states_to_reals():
    snaps = SnapshotSet(np.array([[0, 1, 2], [0, 2, 1]]), 3)
    assert node_series(snaps).tolist() == [[1.0, 2.0, 3.0], [1.0, 3.0, 2.0]]


def test_correlation_examples():
    rng = np.random.default_rng(0)
    a = rng.integers(0, 2, 10_000)
    data = np.column_stack([a, a, rng.integers(0, 2, 10_000), np.zeros(10_000, int)])
    S = correlation(SnapshotSet(data, 2)).scores
    assert S[0, 1] == pytest.approx(1.0)
    assert S[0, 2] < 0.05
    assert not S[3].any() and not S[:, 3].any()
    with pytest.raises(ValueError):
        correlation(SnapshotSet(data[:1], 2))


def test_anti_correlation_is_negative_unless_absolute():
    a = np.random.default_rng(1).integers(0, 2, 500)
    snaps = SnapshotSet(np.column_stack([a, 1 - a, a]), 2)
    assert correlation(snaps).scores[0, 1] == pytest.approx(-1.0)
    assert correlation(snaps, absolute=True).scores[0, 1] == pytest.approx(1.0)
    # the anti-correlated pair ranks last under signed scores
    assert threshold_top_k(correlation(snaps), 1).edges() == [(0, 2)]


def test_mutual_information_examples():
    rng = np.random.default_rng(2)
    a = rng.integers(0, 2, 20_000)
    b = rng.integers(0, 2, 20_000)
    S = mutual_information(SnapshotSet(np.column_stack([a, a, b]), 2)).scores
    assert S[0, 1] == pytest.approx(mi_by_entropies(a, a), abs=1e-12)
    assert S[0, 1] == pytest.approx(1.0, abs=1e-3)
    assert S[0, 2] == pytest.approx(mi_by_entropies(a, b), abs=1e-12)


@pytest.mark.parametrize("s", [2, 3, 5])
def test_mutual_information_bias_bound(s):
    m = 5000
    rng = np.random.default_rng(s)
    S = mutual_information(SnapshotSet(rng.integers(0, s, (m, 30)), s)).scores
    # for independent nodes the plug-in estimate averages (s-1)^2 / (2 m ln 2)
    bias = (s - 1) ** 2 / (2 * m * np.log(2))
    mean = S[np.triu_indices(30, 1)].mean()
    assert 0.7 * bias <= mean <= 1.3 * bias


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 4))
def test_mutual_information_ignores_state_labels(seed, s):
    rng = np.random.default_rng(seed)
    data = rng.integers(0, s, (200, 4))
    data[:, 1] = (data[:, 0] + rng.integers(0, 2, 200)) % s
    relabel = np.array([rng.permutation(s) for _ in range(4)])
    renamed = relabel[np.arange(4), data]
    a = mutual_information(SnapshotSet(data, s)).scores
    b = mutual_information(SnapshotSet(renamed, s)).scores
    np.testing.assert_allclose(a, b, atol=1e-12)


def test_correlation_depends_on_state_labels():
    rng = np.random.default_rng(3)
    x = rng.integers(0, 3, 2000)
    y = np.where(x == 1, 2, np.where(x == 2, 1, 0))  # deterministic but non-monotone in the labels
    data = np.column_stack([x, x, y])
    S = correlation(SnapshotSet(data, 3)).scores
    assert S[0, 1] == pytest.approx(1.0)
    assert S[0, 2] < 0.9
    assert mutual_information(SnapshotSet(data, 3)).scores[0, 2] == pytest.approx(
        mutual_information(SnapshotSet(data, 3)).scores[0, 1])


def _gaussian_like(m, seed):
    rng = np.random.default_rng(seed)
    z = rng.normal(size=(m, 3))
    z[:, 2] = z[:, 0] + z[:, 1] + 0.01 * rng.normal(size=m)
    return z


def _residual_partial_correlation(series, i, j):
    """Correlation of the residuals of i and j after regressing both on the other nodes."""
    rest = [k for k in range(series.shape[1]) if k not in (i, j)]
    Z = np.column_stack([np.ones(len(series)), series[:, rest]])
    res = [series[:, k] - Z @ np.linalg.lstsq(Z, series[:, k], rcond=None)[0] for k in (i, j)]
    return np.corrcoef(res[0], res[1])[0, 1]


def test_partial_correlation_matches_regression_residuals(monkeypatch):
    series = _gaussian_like(5000, 4)
    import snapnet.baselines as bl
    fake = SnapshotSet(np.zeros((5000, 3), int), 1)
    monkeypatch.setattr(bl, "node_series", lambda _: series)
    exact = bl.partial_correlation(fake, ridge=0.0).scores
    got = bl.partial_correlation(fake, ridge=1e-6).scores
    for i, j in [(0, 1), (0, 2), (1, 2)]:
        ref = _residual_partial_correlation(series, i, j)
        assert exact[i, j] == pytest.approx(ref, abs=1e-9)
        assert got[i, j] == pytest.approx(ref, abs=1e-4)
    # x0 and x1 are independent, yet strongly (negatively) dependent given their noisy sum
    assert got[0, 1] < -0.9
    assert bl.partial_correlation(fake, absolute=True).scores[0, 1] == pytest.approx(-got[0, 1])
    assert np.all(np.isfinite(got))


def test_partial_correlation_ridge_converges(monkeypatch):
    rng = np.random.default_rng(5)
    L = rng.normal(size=(4, 4))
    series = rng.normal(size=(3000, 4)) @ L
    import snapnet.baselines as bl
    monkeypatch.setattr(bl, "node_series", lambda _: series)
    fake = SnapshotSet(np.zeros((3000, 4), int), 1)
    exact = bl.partial_correlation(fake, ridge=0.0).scores
    errs = [np.abs(bl.partial_correlation(fake, ridge=lam).scores - exact).max() for lam in (1e-4, 1e-6, 1e-8)]
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 1e-6


def test_partial_correlation_of_independent_nodes_is_small():
    rng = np.random.default_rng(6)
    snaps = SnapshotSet(rng.integers(0, 2, (10_000, 8)), 2)
    assert partial_correlation(snaps).scores.max() < 0.05


def test_partial_correlation_constant_node():
    rng = np.random.default_rng(7)
    data = rng.integers(0, 2, (100, 3))
    data[:, 1] = 0
    S = partial_correlation(SnapshotSet(data, 2)).scores
    assert not S[1].any()


@pytest.mark.parametrize("method", sorted(METHODS))
def test_scores_symmetric_zero_diagonal(method):
    rng = np.random.default_rng(8)
    S = METHODS[method](SnapshotSet(rng.integers(0, 3, (300, 7)), 3)).scores
    assert np.array_equal(S, S.T)
    assert np.all(np.diag(S) == 0)
    assert np.all(np.isfinite(S))


def test_score_matrix_validation():
    with pytest.raises(ValueError):
        ScoreMatrix(np.full((2, 2), np.nan), "x")
    with pytest.raises(ValueError):
        ScoreMatrix(np.zeros((2, 3)), "x")


def test_threshold_examples():
    S = ScoreMatrix(np.array([[0, 3, 1], [3, 0, 2], [1, 2, 0]], float), "x")
    assert threshold_top_k(S, 0).n_edges == 0
    assert threshold_top_k(S, 2).edges() == [(0, 1), (1, 2)]
    with pytest.raises(ValueError):
        threshold_top_k(S, 4)


def test_threshold_ties_are_lexicographic():
    S = ScoreMatrix(np.ones((4, 4)), "x")
    assert threshold_top_k(S, 3).edges() == [(0, 1), (0, 2), (0, 3)]


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 10), st.integers(0, 2**32 - 1), st.data())
def test_threshold_keeps_exactly_k(n, seed, data):
    k = data.draw(st.integers(0, n * (n - 1) // 2))
    rng = np.random.default_rng(seed)
    S = ScoreMatrix(rng.integers(0, 3, (n, n)).astype(float), "x")
    g = threshold_top_k(S, k)
    assert g.n_edges == k
    kept = [S.scores[i, j] for i, j in g.edges()]
    dropped = [S.scores[i, j] for i in range(n) for j in range(i + 1, n) if not g.adj[i, j]]
    assert not kept or not dropped or min(kept) >= max(dropped)


def test_correlation_recovers_sis_er():
    g = generate(preset("ER"))
    snaps = sample_snapshots(g, DynamicsSpec("SIS"), SimConfig(seed=1), 10_000)
    assert graph_loss(threshold_top_k(correlation(snaps), g.n_edges), g) <= 2


def test_scores_csv():
    S = ScoreMatrix(np.array([[0, 0.5], [0.5, 0]]), "Corr")
    assert S.to_csv() == "0.0,0.5\n0.5,0.0\n"
