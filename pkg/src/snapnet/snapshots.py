"""Snapshot containers, one-hot encoding, mini-batching and the text format.

On disk a snapshot set is plain text::

    m n s model_tag graph_tag
    0 1 1 0 ...        # one line per snapshot, n state indices

Tags must not contain whitespace; an empty tag is written as ``-``.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError


@dataclass(frozen=True, eq=False)
class SnapshotSet:
    data: np.ndarray  # (m, n) state indices
    s: int
    model_tag: str = "-"
    graph_tag: str = "-"

    def __post_init__(self):
        d = np.asarray(self.data)
        if d.ndim != 2:
            raise DataError(f"snapshot data must be 2-D (m, n), got shape {d.shape}")
        if d.shape[0] < 1:
            raise DataError("a snapshot set needs at least one snapshot")
        if self.s < 1:
            raise DataError(f"state count must be positive, got {self.s}")
        if d.size and (d.min() < 0 or d.max() >= self.s):
            raise DataError(f"state indices must lie in [0, {self.s})")
        for tag in (self.model_tag, self.graph_tag):
            if not tag or any(c.isspace() for c in tag):
                raise DataError(f"tag {tag!r} must be non-empty without whitespace")
        d = d.astype(np.int64)
        d.setflags(write=False)
        object.__setattr__(self, "data", d)

    @property
    def m(self) -> int:
        return self.data.shape[0]

    @property
    def n(self) -> int:
        return self.data.shape[1]

    def one_hot(self, dtype=np.float64) -> np.ndarray:
        """All snapshots as a (m, n, s) array."""
        return one_hot(self.data, self.s, dtype=dtype)

    def histograms(self) -> np.ndarray:
        """Per-node state counts, shape (n, s)."""
        return self.one_hot(np.int64).sum(axis=0)

    def canonical(self) -> "SnapshotSet":
        """Copy with snapshots sorted lexicographically (order-free form)."""
        order = np.lexsort(self.data.T[::-1])
        return SnapshotSet(self.data[order], self.s, self.model_tag, self.graph_tag)

    def subset(self, count: int) -> "SnapshotSet":
        return SnapshotSet(self.data[:count], self.s, self.model_tag, self.graph_tag)

    def __eq__(self, other):
        if not isinstance(other, SnapshotSet):
            return NotImplemented
        return (self.s == other.s and self.model_tag == other.model_tag
                and self.graph_tag == other.graph_tag
                and np.array_equal(self.data, other.data))

    def __repr__(self):
        return f"SnapshotSet(m={self.m}, n={self.n}, s={self.s}, model={self.model_tag}, graph={self.graph_tag})"


def one_hot(states, s: int, dtype=np.float64) -> np.ndarray:
    """One-hot encode state indices along a new trailing axis of length ``s``."""
    x = np.asarray(states)
    if x.size and (x.min() < 0 or x.max() >= s):
        raise DataError(f"state index out of range for s={s}")
    return (x[..., None] == np.arange(s)).astype(dtype)


def shuffled_order(m: int, epoch_seed) -> np.ndarray:
    """Permutation of ``range(m)`` that depends only on ``m`` and the seed."""
    return np.random.default_rng(epoch_seed).permutation(m)


def batch_indices(m: int, b: int, epoch_seed) -> list[np.ndarray]:
    if b < 1:
        raise ValueError(f"batch size must be >= 1, got {b}")
    order = shuffled_order(m, epoch_seed)
    return [order[k:k + b] for k in range(0, m, b)]


def batches(snapshots: SnapshotSet, b: int, epoch_seed) -> list[np.ndarray]:
    """Shuffle by ``epoch_seed`` and cut into one-hot batches of (up to) ``b``."""
    return [one_hot(snapshots.data[idx], snapshots.s)
            for idx in batch_indices(snapshots.m, b, epoch_seed)]


def save(snapshots: SnapshotSet, path) -> None:
    header = f"{snapshots.m} {snapshots.n} {snapshots.s} {snapshots.model_tag} {snapshots.graph_tag}"
    body = "\n".join(" ".join(map(str, row)) for row in snapshots.data.tolist())
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(header + "\n" + body + "\n")


def load(path) -> SnapshotSet:
    text = Path(path).read_text()
    lines = text.splitlines()
    if not lines or not lines[0].strip():
        raise DataError("empty snapshot file", line=1)
    head = lines[0].split()
    if len(head) != 5:
        raise DataError("header must be 'm n s model_tag graph_tag'", line=1)
    try:
        m, n, s = (int(t) for t in head[:3])
    except ValueError:
        raise DataError(f"non-integer sizes in header {lines[0]!r}", line=1) from None
    if m < 1 or n < 1 or s < 1:
        raise DataError("m, n and s must be positive", line=1)
    rows = lines[1:]
    while rows and not rows[-1].strip():
        rows.pop()
    if len(rows) != m:
        raise DataError(f"header announces {m} snapshots, found {len(rows)}", line=1)
    data = np.empty((m, n), dtype=np.int64)
    for k, ln in enumerate(rows):
        lineno = k + 2
        try:
            vals = [int(t) for t in ln.split()]
        except ValueError:
            raise DataError(f"non-integer state in {ln!r}", line=lineno) from None
        if len(vals) != n:
            raise DataError(f"expected {n} states, found {len(vals)}", line=lineno)
        if min(vals) < 0 or max(vals) >= s:
            raise DataError(f"state index outside [0, {s})", line=lineno)
        data[k] = vals
    return SnapshotSet(data, s, head[3], head[4])
