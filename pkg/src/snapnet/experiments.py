"""End-to-end experiment drivers: loss landscape, sample size, method comparison, surfaces.

Each ``run_*`` function writes CSV files (plus an SVG chart) into
``cfg.out`` and returns the rows it wrote. CSV files start with a
``# snapnet <experiment> seed=... config=...`` line and every row repeats the
config hash, so a rerun with the same configuration produces identical
bytes. Wall-clock runtimes go to separate ``*_runtime.csv`` files.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import os
import tempfile
import time
from dataclasses import asdict, dataclass, fields, replace
from multiprocessing import get_context
from pathlib import Path

import numpy as np
from scipy.stats import spearmanr

from . import baselines, svg
from .dynamics import DynamicsSpec, SimConfig, canonical_model, sample_snapshots
from .errors import ConfigError
from .graphs import Graph, enumerate_connected, generate, graph_loss, preset
from .model import export_prediction_surface, load_checkpoint, save_checkpoint
from .snapshots import SnapshotSet
from .train import TrainConfig, train, train_weights_fixed_graphs

log = logging.getLogger(__name__)

EXPERIMENTS = ("landscape", "samplesize", "compare", "surface")
ALL_MODELS = ("SIS", "MajorityFlip", "InvVoter", "RPS", "ForestFire", "CML")
ALL_GRAPHS = ("ER", "Geometric", "Grid2D", "WattsStrogatzNewman")
ALL_METHODS = ("GINA", "Corr", "MI", "ParCorr")
# fields that do not change results
_VOLATILE = {"out", "workers", "force", "checkpoint"}


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str = "compare"
    graph: str = "ER"
    graph_seed: int | None = None
    model: str = "SIS"
    snapshots: int = 10_000
    seed: int = 0
    repetitions: int = 1
    burn_in: int = 50
    # training
    batch_size: int = 100
    lr: float = 1e-4
    max_epochs: int = 10_000
    early_stop_window: int = 500
    check_interval: int = 50
    # landscape: weight-only training per candidate
    landscape_epochs: int = 2000
    landscape_lr: float | None = None  # None: same as lr
    # samplesize
    grid_sizes: tuple = (5, 7, 10)
    sample_counts: tuple = (100, 1000, 10_000)
    # compare
    models: tuple = ALL_MODELS
    graphs: tuple = ALL_GRAPHS
    methods: tuple = ALL_METHODS
    # surface
    node: int | None = None
    max_degree: int = 10
    checkpoint: str | None = None
    out: str = "."
    workers: int = 1
    force: bool = False

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}")
        if self.repetitions < 1:
            raise ConfigError("repetitions must be >= 1")
        if self.snapshots < 1:
            raise ConfigError("snapshot count must be >= 1")
        bad = set(self.methods) - set(ALL_METHODS)
        if bad:
            raise ConfigError(f"unknown methods {sorted(bad)}")
        object.__setattr__(self, "model", canonical_model(self.model))
        object.__setattr__(self, "models", tuple(canonical_model(m) for m in self.models))

    def train_config(self, seed=None) -> TrainConfig:
        try:
            return TrainConfig(batch_size=self.batch_size, lr=self.lr, max_epochs=self.max_epochs,
                               early_stop_window=self.early_stop_window,
                               check_interval=self.check_interval,
                               seed=self.seed if seed is None else seed)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def sim_config(self, seed=None) -> SimConfig:
        return SimConfig(burn_in_events=self.burn_in, seed=self.seed if seed is None else seed)

    def graph_spec(self, family=None):
        family = family or self.graph
        kw = {} if self.graph_seed is None else {"seed": self.graph_seed}
        return preset(family, **kw)

    def config_hash(self) -> str:
        d = {k: v for k, v in asdict(self).items() if k not in _VOLATILE}
        blob = json.dumps(d, sort_keys=True, default=list)
        return hashlib.sha256(blob.encode()).hexdigest()[:12]


def config_from_mapping(mapping: dict, **base) -> ExperimentConfig:
    """Build a config from string values (config file) and typed overrides."""
    types = {f.name: f for f in fields(ExperimentConfig)}
    kwargs = dict(base)
    for key, raw in mapping.items():
        key = key.replace("-", "_")
        if key not in types:
            raise ConfigError(f"unknown config key {key!r}")
        kwargs.setdefault(key, _coerce(key, raw, types[key].default))
    return ExperimentConfig(**kwargs)


def _coerce(key, raw, default):
    if not isinstance(raw, str):
        return raw
    raw = raw.strip()
    try:
        if isinstance(default, bool):
            return raw.lower() in ("1", "true", "yes", "on")
        if isinstance(default, tuple):
            items = [t.strip() for t in raw.split(",") if t.strip()]
            return tuple(int(t) if t.lstrip("-").isdigit() else t for t in items)
        if default is None:
            if raw.lower() in ("", "none"):
                return None
            if raw.lstrip("-").isdigit():
                return int(raw)
            try:
                return float(raw)
            except ValueError:
                return raw
        return type(default)(raw)
    except ValueError:
        raise ConfigError(f"bad value {raw!r} for {key}") from None


def read_config_file(path) -> dict:
    """Flat ``key = value`` file; ``#`` starts a comment."""
    out = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        out[key.strip()] = value.strip()
    return out


# --------------------------------------------------------------------------
# output helpers


def atomic_write(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    with os.fdopen(fd, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def csv_text(cfg: ExperimentConfig, header: list, rows: list, tag: str | None = None) -> str:
    buf = io.StringIO()
    buf.write(f"# snapnet {tag or cfg.experiment} seed={cfg.seed} config={cfg.config_hash()}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([*header, "config_hash"])
    h = cfg.config_hash()
    for row in rows:
        w.writerow([_cell(row[k]) for k in header] + [h])
    return buf.getvalue()


def _cell(x):
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    if isinstance(x, np.integer):
        return int(x)
    return x


def read_csv_rows(path) -> list[dict]:
    with open(path) as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    return list(csv.DictReader(lines))


# --------------------------------------------------------------------------
# experiment 1: loss landscape

def _landscape_chunk(args) -> list[float]:
    snaps, chunk, tcfg, epochs = args
    return train_weights_fixed_graphs(snaps, chunk, tcfg, epochs)


def landscape_losses(snaps: SnapshotSet, candidates, tcfg: TrainConfig, epochs: int, workers: int = 1):
    """Weight-only training loss of every candidate, in candidate order.

    Candidates are trained side by side; with several workers each process
    takes a contiguous block. Every candidate's result is independent of the
    block it lands in, so the output does not depend on ``workers``.
    """
    candidates = list(candidates)
    if workers <= 1 or len(candidates) < 2:
        return train_weights_fixed_graphs(snaps, candidates, tcfg, epochs)
    blocks = np.array_split(np.arange(len(candidates)), min(workers, len(candidates)))
    jobs = [(snaps, [candidates[i] for i in b], tcfg, epochs) for b in blocks]
    with get_context("fork").Pool(len(jobs)) as pool:
        parts = pool.map(_landscape_chunk, jobs)
    return [x for part in parts for x in part]


def landscape_summary(rows: list[dict]) -> list[dict]:
    by = {}
    for r in rows:
        by.setdefault(r["graph_loss"], []).append(r["prediction_loss"])
    return [{"graph_loss": gl, "count": len(v), "mean_loss": float(np.mean(v)),
             "min_loss": float(np.min(v)), "max_loss": float(np.max(v))} for gl, v in sorted(by.items())]


def landscape_stats(rows: list[dict]) -> dict:
    """Spearman(graph loss, group-mean loss) and the ground truth's loss rank."""
    summary = landscape_summary(rows)
    rho = spearmanr([s["graph_loss"] for s in summary], [s["mean_loss"] for s in summary])[0]
    rho_all = spearmanr([r["graph_loss"] for r in rows], [r["prediction_loss"] for r in rows])[0]
    losses = np.array([r["prediction_loss"] for r in rows])
    truth = [r["prediction_loss"] for r in rows if r["graph_loss"] == 0]
    rank = int(np.sum(losses < truth[0])) if truth else None
    return {"spearman_mean": float(rho), "spearman_all": float(rho_all), "truth_rank": rank,
            "truth_quantile": None if rank is None else rank / len(rows)}


def run_landscape(cfg: ExperimentConfig, snaps: SnapshotSet | None = None,
                  truth: Graph | None = None) -> list[dict]:
    truth = truth or generate(cfg.graph_spec())
    if truth.n != 5 and not cfg.force:
        raise ConfigError(f"landscape enumerates all graphs on 5 nodes; got n={truth.n} (use --force)")
    if truth.n > 5:
        log.warning("enumerating connected graphs on %d nodes; this is expensive", truth.n)
    if snaps is None:
        snaps = sample_snapshots(truth, DynamicsSpec(cfg.model), cfg.sim_config(), cfg.snapshots,
                                 workers=cfg.workers)
    candidates = enumerate_connected(truth.n)
    tcfg = cfg.train_config()
    if cfg.landscape_lr is not None:
        tcfg = replace(tcfg, lr=cfg.landscape_lr)
    start = time.perf_counter()
    losses = landscape_losses(snaps, candidates, tcfg, cfg.landscape_epochs, cfg.workers)
    elapsed = time.perf_counter() - start
    rows = [{"candidate_id": k, "graph_loss": graph_loss(c, truth), "prediction_loss": loss,
             "edges": " ".join(f"{i}-{j}" for i, j in c.edges())}
            for k, (c, loss) in enumerate(zip(candidates, losses))]
    summary = landscape_summary(rows)
    out = Path(cfg.out)
    atomic_write(out / "landscape.csv",
                 csv_text(cfg, ["candidate_id", "graph_loss", "prediction_loss", "edges"], rows))
    atomic_write(out / "landscape_summary.csv",
                 csv_text(cfg, ["graph_loss", "count", "mean_loss", "min_loss", "max_loss"], summary))
    atomic_write(out / "landscape_runtime.csv", f"experiment,runtime_s\nlandscape,{elapsed:.3f}\n")
    atomic_write(out / "landscape.svg", svg.errorbar_chart(
        [s["graph_loss"] for s in summary], [s["mean_loss"] for s in summary],
        [s["min_loss"] for s in summary], [s["max_loss"] for s in summary],
        title=f"Loss landscape ({cfg.model}, {truth.n} nodes)", xlabel="graph loss",
        ylabel="prediction loss"))
    return rows


# --------------------------------------------------------------------------
# experiment 2: sample size


def run_samplesize(cfg: ExperimentConfig) -> list[dict]:
    rows = []
    spec = DynamicsSpec(cfg.model)
    curves = {}
    for L in cfg.grid_sizes:
        truth = generate(preset("Grid2D", rows=L, cols=L, **({} if cfg.graph_seed is None
                                                            else {"seed": cfg.graph_seed})))
        for run in range(cfg.repetitions):
            # one pool of snapshots per (L, run); smaller sample sizes are prefixes
            pool = sample_snapshots(truth, spec, cfg.sim_config(cfg.seed + run), max(cfg.sample_counts),
                                    workers=cfg.workers)
            for m in cfg.sample_counts:
                _, _, report = train(pool.subset(m), cfg.train_config(cfg.seed + run), ground_truth=truth)
                for epoch, gl in report.graph_losses.items():
                    rows.append({"L": L, "m": m, "epoch": epoch, "run": run, "graph_loss": gl})
                xs, ys = zip(*sorted(report.graph_losses.items()))
                curves[f"L={L} m={m} run={run}"] = (xs, ys)
                log.info("samplesize L=%d m=%d run=%d final graph loss %d", L, m, run, ys[-1])
    out = Path(cfg.out)
    atomic_write(out / "samplesize.csv", csv_text(cfg, ["L", "m", "epoch", "run", "graph_loss"], rows))
    atomic_write(out / "samplesize.svg", svg.line_chart(
        curves, title=f"Graph loss vs epoch ({cfg.model})", xlabel="epoch", ylabel="graph loss"))
    return rows


def final_graph_losses(rows: list[dict]) -> dict:
    """``(L, m, run) -> graph loss`` at the last recorded check."""
    last = {}
    for r in rows:
        key = (int(r["L"]), int(r["m"]), int(r["run"]))
        if key not in last or int(r["epoch"]) > last[key][0]:
            last[key] = (int(r["epoch"]), int(r["graph_loss"]))
    return {k: v[1] for k, v in last.items()}


# --------------------------------------------------------------------------
# experiment 3: comparison with baselines


def infer(method: str, snaps: SnapshotSet, truth: Graph, cfg: ExperimentConfig) -> tuple[Graph, float]:
    """Inferred graph and the wall-clock seconds the inference took."""
    start = time.perf_counter()
    if method == "GINA":
        _, _, report = train(snaps, cfg.train_config())
        g = report.final_graph
    else:
        g = baselines.threshold_top_k(baselines.METHODS[method](snaps), truth.n_edges)
    return g, time.perf_counter() - start


def run_compare(cfg: ExperimentConfig) -> list[dict]:
    rows, timing = [], []
    for model in cfg.models:
        spec = DynamicsSpec(model)
        for family in cfg.graphs:
            truth = generate(cfg.graph_spec(family))
            snaps = sample_snapshots(truth, spec, cfg.sim_config(), cfg.snapshots, workers=cfg.workers)
            for method in cfg.methods:
                g, secs = infer(method, snaps, truth, cfg)
                rows.append({"model": model, "graph": truth.meta["family"], "method": method,
                             "graph_loss": graph_loss(g, truth)})
                timing.append({**rows[-1], "runtime_s": round(secs, 3)})
                log.info("compare %s/%s/%s graph loss %d (%.1fs)", model, family, method,
                         rows[-1]["graph_loss"], secs)
    out = Path(cfg.out)
    atomic_write(out / "compare.csv", csv_text(cfg, ["model", "graph", "method", "graph_loss"], rows))
    atomic_write(out / "compare_runtime.csv",
                 csv_text(cfg, ["model", "graph", "method", "graph_loss", "runtime_s"], timing))
    return rows


# --------------------------------------------------------------------------
# prediction surface


def run_surface(cfg: ExperimentConfig) -> list[dict]:
    if cfg.checkpoint:
        rg, net = load_checkpoint(cfg.checkpoint)
    else:
        if DynamicsSpec(cfg.model).n_states != 2:
            raise ConfigError(f"surface needs a 2-state model, {cfg.model} has more states")
        truth = generate(cfg.graph_spec())
        snaps = sample_snapshots(truth, DynamicsSpec(cfg.model), cfg.sim_config(), cfg.snapshots,
                                 workers=cfg.workers)
        rg, net, _ = train(snaps, cfg.train_config(), ground_truth=truth)
        save_checkpoint(Path(cfg.out) / "surface_checkpoint.txt", rg, net)
    if net.s != 2:
        raise ConfigError(f"surface needs a 2-state model, checkpoint has s={net.s}")
    node = cfg.node
    if node is None:
        node = int(np.random.default_rng(cfg.seed).integers(net.n))
    table = export_prediction_surface(net, node, cfg.max_degree)
    rows = [{"node": node, "m0": int(a), "m1": int(b), "p_state0": float(p)} for a, b, p in table]
    out = Path(cfg.out)
    atomic_write(out / "surface.csv", csv_text(cfg, ["node", "m0", "m1", "p_state0"], rows))
    atomic_write(out / "surface.svg", svg.heatmap(
        [(r["m1"], r["m0"], r["p_state0"]) for r in rows],
        title=f"P(state 0) for node {node}", xlabel="neighbors in state 1", ylabel="neighbors in state 0"))
    return rows


RUNNERS = {"landscape": run_landscape, "samplesize": run_samplesize, "compare": run_compare,
           "surface": run_surface}
