"""Snapshot generation for the six benchmark dynamics.

Five models are continuous-time Markov chains on the node states, simulated
exactly with a Gillespie loop; the coupled map lattice (CML) is iterated
deterministically and discretized into equal-width bins.

Every snapshot comes from its own run. Its random numbers come from a
counter-based stream (splitmix64 over ``key + counter``) whose key is a hash
of ``(seed, snapshot_index)``, so output does not depend on how snapshots are
split across workers.

A CTMC snapshot is the state at a fixed time, not after a fixed number of
jumps: sampling right after the k-th jump would draw from the embedded jump
chain, whose stationary law is tilted by the exit rates. The run performs
``burn_in_events * n`` jumps, reads the elapsed time ``t_b`` and reports the
state at time ``t_b * (1 + observe_fraction)``.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numba
import numpy as np

from .errors import ConfigError
from .graphs import Graph
from .snapshots import SnapshotSet

MODEL_CODES = {"SIS": 0, "InvVoter": 1, "MajorityFlip": 2, "RPS": 3, "ForestFire": 4, "CML": 5}

STATE_NAMES = {
    "SIS": ("S", "I"),
    "InvVoter": ("A", "B"),
    "MajorityFlip": ("A", "B"),
    "RPS": ("R", "P", "S"),
    "ForestFire": ("E", "T", "F"),
}

# Parameter order matters: it is the layout handed to the compiled kernels.
DEFAULT_PARAMS = {
    "SIS": {"mu": 2.0, "beta": 1.0, "eps": 0.1},
    "InvVoter": {"eps": 0.01},
    "MajorityFlip": {"eps": 0.01, "x_low": 0.2, "x_high": 0.8, "y_low": 0.3, "y_high": 0.7},
    "RPS": {"eps": 0.01},
    "ForestFire": {"g": 1.0, "f_start": 0.1, "f_end": 2.0, "f_spread": 2.0, "eps": 0.1},
    "CML": {"s": 0.1, "r": 3.57, "bins": 10},
}

_ALIASES = {name.lower(): name for name in MODEL_CODES}
_ALIASES.update({"majority-flip": "MajorityFlip", "majority": "MajorityFlip", "invvoter": "InvVoter",
                 "inverted-voter": "InvVoter", "forest-fire": "ForestFire", "ff": "ForestFire"})


def canonical_model(name: str) -> str:
    try:
        return _ALIASES[name.lower()]
    except KeyError:
        raise ConfigError(f"unknown model {name!r}; choose from {tuple(MODEL_CODES)}") from None


@dataclass(frozen=True)
class DynamicsSpec:
    model: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        model = canonical_model(self.model)
        unknown = set(self.params) - set(DEFAULT_PARAMS[model])
        if unknown:
            raise ConfigError(f"unknown {model} parameters: {sorted(unknown)}")
        params = {**DEFAULT_PARAMS[model], **self.params}
        if any(float(v) < 0 for v in params.values()):
            raise ConfigError(f"{model} parameters must be non-negative: {params}")
        if model == "MajorityFlip":
            if not (params["x_low"] <= params["x_high"] and params["y_low"] <= params["y_high"]):
                raise ConfigError("MajorityFlip thresholds must be ordered (low <= high)")
        if model == "CML":
            if int(params["bins"]) != params["bins"] or params["bins"] < 2:
                raise ConfigError("CML needs an integer number of bins >= 2")
            params["bins"] = int(params["bins"])
            if not 0 <= params["s"] <= 1:
                raise ConfigError("CML coupling s must lie in [0, 1]")
        object.__setattr__(self, "model", model)
        object.__setattr__(self, "params", params)

    @property
    def code(self) -> int:
        return MODEL_CODES[self.model]

    @property
    def n_states(self) -> int:
        if self.model == "CML":
            return self.params["bins"]
        return len(STATE_NAMES[self.model])

    @property
    def state_names(self) -> tuple[str, ...]:
        if self.model == "CML":
            return tuple(f"b{k}" for k in range(self.n_states))
        return STATE_NAMES[self.model]

    @property
    def stochastic(self) -> bool:
        return self.model != "CML"

    def param_vector(self) -> np.ndarray:
        return np.array([float(self.params[k]) for k in DEFAULT_PARAMS[self.model]])


@dataclass(frozen=True)
class SimConfig:
    burn_in_events: int = 50
    seed: int = 0
    cml_steps_range: tuple[int, int] = (20, 200)
    observe_fraction: float = 0.2

    def __post_init__(self):
        if self.burn_in_events < 1:
            raise ConfigError("burn_in_events must be >= 1")
        lo, hi = self.cml_steps_range
        if not 0 <= lo <= hi:
            raise ConfigError(f"cml_steps_range must satisfy 0 <= min <= max, got {self.cml_steps_range}")
        if self.observe_fraction < 0:
            raise ConfigError("observe_fraction must be >= 0")


# --------------------------------------------------------------------------
# compiled kernels

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30, _S27, _S31, _S11 = np.uint64(30), np.uint64(27), np.uint64(31), np.uint64(11)
_TWO53 = 1.0 / 9007199254740992.0


@numba.njit(cache=True, nogil=True)
def _uniform(key, counter):
    z = key + counter * _GOLDEN
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    z = z ^ (z >> _S31)
    return float(z >> _S11) * _TWO53


@numba.njit(cache=True, nogil=True)
def _transition(code, state, counts, p):
    """Single outgoing transition (target, rate) of a node; every model has one per state."""
    if code == 0:  # SIS: S -> I, I -> S
        if state == 0:
            return 1, p[1] * counts[1] + p[2]
        return 0, p[0] + p[2]
    if code == 1:  # InvVoter: flip away from own opinion
        if state == 0:
            return 1, counts[0] + p[0]
        return 0, counts[1] + p[0]
    if code == 2:  # MajorityFlip
        deg = counts[0] + counts[1]
        ind = 0.0
        if deg > 0:
            frac = counts[0] / deg
            if state == 0:
                if frac < p[1] or frac > p[2]:
                    ind = 1.0
            elif frac < p[3] or frac > p[4]:
                ind = 1.0
        return 1 - state, ind + p[0]
    if code == 3:  # RPS: R -> P -> S -> R, driven by the predator's count
        nxt = (state + 1) % 3
        return nxt, counts[nxt] + p[0]
    if code == 4:  # ForestFire with states E=0, T=1, F=2
        if state == 1:
            return 2, p[1] + counts[2] * p[3] + p[4]
        if state == 2:
            return 0, p[2] + p[4]
        return 1, p[0] + p[4]
    return -1, -1.0


@numba.njit(cache=True, nogil=True)
def _tree_set(tree, size, i, value):
    pos = size + i
    tree[pos] = value
    pos //= 2
    while pos >= 1:
        tree[pos] = tree[2 * pos] + tree[2 * pos + 1]
        pos //= 2


@numba.njit(cache=True, nogil=True)
def _tree_pick(tree, size, u):
    pos = 1
    while pos < size:
        left = tree[2 * pos]
        if u < left:
            pos = 2 * pos
        else:
            u -= left
            pos = 2 * pos + 1
    if tree[pos] > 0.0:
        return pos - size
    # rounding pushed us onto an empty leaf; take the last live one
    for leaf in range(size - 1, -1, -1):
        if tree[size + leaf] > 0.0:
            return leaf
    return -1


@numba.njit(cache=True, nogil=True)
def _ctmc_batch(indptr, indices, code, p, n_states, pinned, burn_events, observe_fraction, keys, out):
    n = indptr.shape[0] - 1
    size = 1
    while size < n:
        size *= 2
    tree = np.zeros(2 * size)
    state = np.empty(n, dtype=np.int64)
    target = np.empty(n, dtype=np.int64)
    counts = np.zeros((n, n_states))
    for snap in range(keys.shape[0]):
        key = keys[snap]
        ctr = np.uint64(0)
        for i in range(n):
            if pinned[i] >= 0:
                state[i] = pinned[i]
            else:
                k = int(_uniform(key, ctr) * n_states)
                ctr += np.uint64(1)
                state[i] = min(k, n_states - 1)
        counts[:, :] = 0.0
        for i in range(n):
            for e in range(indptr[i], indptr[i + 1]):
                counts[i, state[indices[e]]] += 1.0
        tree[:] = 0.0
        for i in range(n):
            if pinned[i] < 0:
                tgt, rate = _transition(code, state[i], counts[i], p)
                target[i] = tgt
                tree[size + i] = rate
        for pos in range(size - 1, 0, -1):
            tree[pos] = tree[2 * pos] + tree[2 * pos + 1]

        t = 0.0
        t_obs = np.inf
        events = 0
        while True:
            total = tree[1]
            if not total > 0.0:
                return snap  # absorbing state; caller raises
            u = _uniform(key, ctr)
            ctr += np.uint64(1)
            dt = -np.log1p(-u) / total
            if t + dt > t_obs:
                break
            t += dt
            i = _tree_pick(tree, size, _uniform(key, ctr) * total)
            ctr += np.uint64(1)
            old = state[i]
            new = target[i]
            state[i] = new
            tgt, rate = _transition(code, new, counts[i], p)
            target[i] = tgt
            _tree_set(tree, size, i, rate)
            for e in range(indptr[i], indptr[i + 1]):
                j = indices[e]
                counts[j, old] -= 1.0
                counts[j, new] += 1.0
                if pinned[j] < 0:
                    tgt, rate = _transition(code, state[j], counts[j], p)
                    target[j] = tgt
                    _tree_set(tree, size, j, rate)
            events += 1
            if events == burn_events:
                t_obs = t * (1.0 + observe_fraction)
        out[snap, :] = state
    return -1


@numba.njit(cache=True, nogil=True)
def _cml_batch(indptr, indices, coupling, r, bins, step_lo, step_hi, keys, out, check_range):
    n = indptr.shape[0] - 1
    x = np.empty(n)
    fx = np.empty(n)
    for snap in range(keys.shape[0]):
        key = keys[snap]
        ctr = np.uint64(0)
        for i in range(n):
            x[i] = _uniform(key, ctr)
            ctr += np.uint64(1)
        steps = step_lo + int(_uniform(key, ctr) * (step_hi - step_lo + 1))
        ctr += np.uint64(1)
        steps = min(steps, step_hi)
        for _ in range(steps):
            _cml_step(indptr, indices, coupling, r, x, fx)
            if check_range:
                for i in range(n):
                    if x[i] < 0.0 or x[i] > 1.0:
                        return snap
        for i in range(n):
            out[snap, i] = min(int(x[i] * bins), bins - 1)
    return -1


@numba.njit(cache=True, nogil=True)
def _cml_step(indptr, indices, coupling, r, x, fx):
    n = x.shape[0]
    for i in range(n):
        fx[i] = r * x[i] * (1.0 - x[i])
    for i in range(n):
        deg = indptr[i + 1] - indptr[i]
        if deg == 0:
            x[i] = fx[i]
        else:
            acc = 0.0
            for e in range(indptr[i], indptr[i + 1]):
                acc += fx[indices[e]]
            x[i] = (1.0 - coupling) * fx[i] + coupling / deg * acc


# --------------------------------------------------------------------------
# public API


def node_rate(spec: DynamicsSpec, state: int, counts) -> list[tuple[int, float]]:
    """Outgoing transitions ``[(target_state, rate)]`` of a node.

    ``counts`` is the node's neighborhood counting vector.
    """
    if not spec.stochastic:
        raise ConfigError("CML is deterministic and has no transition rates")
    counts = np.asarray(counts, dtype=float)
    if counts.shape != (spec.n_states,) or np.any(counts < 0):
        raise ConfigError(f"counts must be {spec.n_states} non-negative numbers, got {counts}")
    if not 0 <= state < spec.n_states:
        raise ConfigError(f"state {state} out of range for {spec.model}")
    target, rate = _transition(spec.code, int(state), counts, spec.param_vector())
    return [(int(target), float(rate))]


def cml_step(graph: Graph, spec: DynamicsSpec, x) -> np.ndarray:
    """One synchronous CML update of the real node values ``x``."""
    indptr, indices = _csr(graph)
    x = np.array(x, dtype=float)
    _cml_step(indptr, indices, float(spec.params["s"]), float(spec.params["r"]), x, np.empty_like(x))
    return x


def _csr(graph: Graph):
    indptr = np.zeros(graph.n + 1, dtype=np.int64)
    indptr[1:] = np.cumsum(graph.degrees())
    indices = np.concatenate([graph.neighbors(i) for i in range(graph.n)] or [np.zeros(0)])
    return indptr, indices.astype(np.int64)


def snapshot_keys(seed: int, indices) -> np.ndarray:
    """Stream keys: a hash of ``(seed, snapshot_index)`` for each index."""
    return np.array([np.random.SeedSequence([int(seed) & (2**64 - 1), int(k)]).generate_state(1, np.uint64)[0]
                     for k in indices], dtype=np.uint64)


def _run(graph, spec, cfg, indices, pinned=None):
    indptr, indices_ = _csr(graph)
    keys = snapshot_keys(cfg.seed, indices)
    out = np.empty((len(keys), graph.n), dtype=np.int64)
    if spec.stochastic:
        pin = np.full(graph.n, -1, dtype=np.int64)
        for node, st in (pinned or {}).items():
            if not 0 <= st < spec.n_states:
                raise ConfigError(f"pinned state {st} out of range")
            pin[node] = st
        status = _ctmc_batch(indptr, indices_, spec.code, spec.param_vector(), spec.n_states, pin,
                             cfg.burn_in_events * graph.n, float(cfg.observe_fraction), keys, out)
        if status >= 0:
            raise RuntimeError(f"total transition rate hit zero in snapshot {indices[status]}")
    else:
        if pinned:
            raise ConfigError("pinning nodes is only supported for stochastic models")
        lo, hi = cfg.cml_steps_range
        status = _cml_batch(indptr, indices_, float(spec.params["s"]), float(spec.params["r"]),
                            spec.params["bins"], int(lo), int(hi), keys, out, spec.params["r"] <= 4.0)
        if status >= 0:
            raise RuntimeError(f"CML value left [0, 1] in snapshot {indices[status]}")
    return out


def simulate_ctmc(graph: Graph, spec: DynamicsSpec, cfg: SimConfig, index: int = 0) -> np.ndarray:
    """One equilibrium snapshot (state indices) of a stochastic model."""
    if not spec.stochastic:
        raise ConfigError("simulate_ctmc needs a stochastic model; use simulate_cml for CML")
    return _run(graph, spec, cfg, [index])[0]


def simulate_cml(graph: Graph, spec: DynamicsSpec, cfg: SimConfig, index: int = 0) -> np.ndarray:
    """One discretized CML snapshot."""
    if spec.stochastic:
        raise ConfigError("simulate_cml needs the CML model")
    return _run(graph, spec, cfg, [index])[0]


def sample_snapshots(graph: Graph, spec: DynamicsSpec, cfg: SimConfig, count: int,
                     workers: int = 1, pinned: dict | None = None,
                     graph_tag: str | None = None) -> SnapshotSet:
    """``count`` independent snapshots; identical for any ``workers``.

    ``pinned`` maps node -> state for nodes that never change (stochastic
    models only); useful for probing a single node's conditional behaviour.
    """
    if count < 1:
        raise ConfigError(f"snapshot count must be >= 1, got {count}")
    idx = np.arange(count)
    if workers <= 1 or count < 2 * workers:
        data = _run(graph, spec, cfg, idx, pinned)
    else:
        chunks = np.array_split(idx, workers)
        with ThreadPoolExecutor(workers) as pool:
            data = np.vstack(list(pool.map(lambda c: _run(graph, spec, cfg, c, pinned), chunks)))
    tag = graph_tag or graph.meta.get("family", "graph")
    return SnapshotSet(data, spec.n_states, spec.model, str(tag))
