"""Pairwise statistical reconstruction baselines.

Each method turns a snapshot set into a symmetric score matrix with zero
diagonal; :func:`threshold_top_k` keeps the ``k`` highest-scoring pairs.
Correlation scores are signed by default, so strongly anti-correlated pairs
rank last; pass ``absolute=True`` to rank by magnitude instead.
States are mapped to the reals ``1, 2, ..., s`` before computing
correlations, which imposes an (arbitrary) order on categorical states.
Mutual information works on the raw categories and does not depend on it.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .graphs import Graph
from .snapshots import SnapshotSet


@dataclass(frozen=True, eq=False)
class ScoreMatrix:
    scores: np.ndarray
    method: str

    def __post_init__(self):
        S = np.asarray(self.scores, dtype=float)
        if S.ndim != 2 or S.shape[0] != S.shape[1]:
            raise ValueError("score matrix must be square")
        if not np.all(np.isfinite(S)):
            raise ValueError("score matrix has non-finite entries")
        S = (S + S.T) / 2
        np.fill_diagonal(S, 0.0)
        object.__setattr__(self, "scores", S)

    @property
    def n(self) -> int:
        return self.scores.shape[0]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        for row in self.scores:
            w.writerow([repr(float(x)) for x in row])
        return buf.getvalue()


def node_series(snapshots: SnapshotSet) -> np.ndarray:
    """Real-valued series, shape (m, n): state index ``k`` becomes ``k + 1``."""
    return snapshots.data.astype(float) + 1.0


def _corr_from_cov(cov, var):
    std = np.sqrt(var)
    live = std > 0
    out = np.zeros_like(cov)
    out[np.ix_(live, live)] = cov[np.ix_(live, live)] / np.outer(std[live], std[live])
    return out


def correlation(snapshots: SnapshotSet, absolute: bool = False) -> ScoreMatrix:
    """Pearson correlation (signed unless ``absolute``); constant nodes score 0."""
    if snapshots.m < 2:
        raise ValueError("correlation needs at least two snapshots")
    Y = node_series(snapshots)
    Y = Y - Y.mean(axis=0)
    cov = Y.T @ Y / (snapshots.m - 1)
    S = np.clip(_corr_from_cov(cov, np.diag(cov).copy()), -1.0, 1.0)
    return ScoreMatrix(np.abs(S) if absolute else S, "Corr")


def mutual_information(snapshots: SnapshotSet) -> ScoreMatrix:
    """Plug-in mutual information in bits between the state distributions of node pairs."""
    m, n, s = snapshots.m, snapshots.n, snapshots.s
    oh = snapshots.one_hot().reshape(m, n * s)
    joint = (oh.T @ oh / m).reshape(n, s, n, s).transpose(0, 2, 1, 3)  # p(x_i=a, x_j=b)
    marg = oh.mean(axis=0).reshape(n, s)
    outer = marg[:, None, :, None] * marg[None, :, None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(joint > 0, joint * np.log2(joint / outer), 0.0)
    mi = np.maximum(terms.sum(axis=(2, 3)), 0.0)
    return ScoreMatrix(mi, "MI")


def partial_correlation(snapshots: SnapshotSet, ridge: float | None = None, absolute: bool = False) -> ScoreMatrix:
    """Partial correlation from the (ridge-regularized) precision matrix, signed unless ``absolute``.

    ``ridge`` is the absolute diagonal load; by default ``1e-6 * trace / n``
    of the covariance of the non-constant nodes. Constant nodes score 0.
    """
    if snapshots.m < 2:
        raise ValueError("partial correlation needs at least two snapshots")
    Y = node_series(snapshots)
    Y = Y - Y.mean(axis=0)
    cov = Y.T @ Y / (snapshots.m - 1)
    if not np.all(np.isfinite(cov)):
        raise ValueError("covariance is not finite")
    live = np.diag(cov) > 0
    out = np.zeros_like(cov)
    sub = cov[np.ix_(live, live)]
    if sub.size:
        lam = 1e-6 * np.trace(sub) / len(sub) if ridge is None else float(ridge)
        P = np.linalg.inv(sub + lam * np.eye(len(sub)))
        d = np.sqrt(np.diag(P))
        out[np.ix_(live, live)] = -P / np.outer(d, d)
    out = np.clip(out, -1.0, 1.0)
    return ScoreMatrix(np.abs(out) if absolute else out, "ParCorr")


METHODS = {"Corr": correlation, "MI": mutual_information, "ParCorr": partial_correlation}


def threshold_top_k(scores: ScoreMatrix, k: int) -> Graph:
    """Graph made of the ``k`` highest-scoring pairs.

    Ties are resolved in favour of the lexicographically smaller ``(i, j)``.
    """
    n = scores.n
    iu, ju = np.triu_indices(n, 1)
    if not 0 <= k <= len(iu):
        raise ValueError(f"k must lie in [0, {len(iu)}], got {k}")
    # pairs from triu_indices are already in lexicographic order, so a
    # stable sort on the negated score keeps that order among ties
    order = np.argsort(-scores.scores[iu, ju], kind="stable")[:k]
    return Graph.from_edges(n, zip(iu[order].tolist(), ju[order].tolist()))
