"""``snapnet`` command line.

Exit codes: 0 success, 2 configuration error, 3 data error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import fields
from pathlib import Path

from . import baselines, experiments
from .dynamics import DynamicsSpec, sample_snapshots
from .errors import ConfigError, DataError
from .experiments import ExperimentConfig, atomic_write, csv_text
from .graphs import generate, graph_loss, read_edgelist, write_edgelist
from .model import save_checkpoint
from .snapshots import load as load_snapshots
from .snapshots import save as save_snapshots
from .train import train

log = logging.getLogger("snapnet")

_CFG_FIELDS = {f.name for f in fields(ExperimentConfig)}


def _csv_list(text):
    return tuple(t.strip() for t in text.split(",") if t.strip())


def _int_list(text):
    try:
        return tuple(int(t) for t in _csv_list(text))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _common(p):
    # defaults are None so that config-file values survive unless a flag is given
    p.add_argument("--seed", type=int, help="master seed (default 0)")
    p.add_argument("--out", help="output directory (default .)")
    p.add_argument("--config", help="flat 'key = value' config file; flags override it")
    p.add_argument("--snapshots", type=int, help="number of snapshots")
    p.add_argument("--model", help="SIS, InvVoter, MajorityFlip, RPS, ForestFire or CML")
    p.add_argument("--graph", help="ER, Geometric, WattsStrogatzNewman, Grid2D or Bull")
    p.add_argument("--graph-seed", type=int, dest="graph_seed", help="override the preset graph seed")
    p.add_argument("--workers", type=int, help="worker processes/threads")
    p.add_argument("--burn-in", type=int, dest="burn_in", help="burn-in events per node")
    p.add_argument("-v", "--verbose", action="count", default=0)


def _training(p):
    p.add_argument("--lr", type=float)
    p.add_argument("--batch-size", type=int, dest="batch_size")
    p.add_argument("--max-epochs", type=int, dest="max_epochs")
    p.add_argument("--early-stop-window", type=int, dest="early_stop_window")
    p.add_argument("--check-interval", type=int, dest="check_interval")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="snapnet", description="Graph inference from independent snapshots.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-graph", help="generate a benchmark graph and write its edge list")
    _common(p)

    p = sub.add_parser("simulate", help="sample snapshots of a dynamical model on a graph")
    _common(p)
    p.add_argument("--graph-file", help="edge list to simulate on instead of a generated graph")

    p = sub.add_parser("train", help="infer a graph from snapshots with the joint model")
    _common(p)
    _training(p)
    p.add_argument("--snapshot-file", help="snapshot file (otherwise simulated from --graph/--model)")
    p.add_argument("--truth", help="ground-truth edge list, enables graph-loss tracking")

    p = sub.add_parser("baseline", help="score node pairs with Corr, MI or ParCorr")
    _common(p)
    p.add_argument("--method", choices=tuple(baselines.METHODS), default="Corr")
    p.add_argument("--snapshot-file")
    p.add_argument("--truth", help="ground-truth edge list (provides k and the graph loss)")
    p.add_argument("--k", type=int, help="number of edges to keep")

    p = sub.add_parser("landscape", help="prediction loss of every connected 5-node candidate")
    _common(p)
    _training(p)
    p.add_argument("--landscape-epochs", type=int, dest="landscape_epochs")
    p.add_argument("--landscape-lr", type=float, dest="landscape_lr")
    p.add_argument("--force", action="store_true", default=None, help="allow graphs with n != 5")

    p = sub.add_parser("samplesize", help="graph loss trajectories for grids and sample sizes")
    _common(p)
    _training(p)
    p.add_argument("--grid-sizes", type=_int_list, dest="grid_sizes")
    p.add_argument("--sample-counts", type=_int_list, dest="sample_counts")
    p.add_argument("--repetitions", type=int)

    p = sub.add_parser("compare", help="joint model vs statistical baselines")
    _common(p)
    _training(p)
    p.add_argument("--models", type=_csv_list)
    p.add_argument("--graphs", type=_csv_list)
    p.add_argument("--methods", type=_csv_list)

    p = sub.add_parser("surface", help="export the prediction layer of a 2-state model")
    _common(p)
    _training(p)
    p.add_argument("--checkpoint", help="trained checkpoint (otherwise trains one)")
    p.add_argument("--node", type=int)
    p.add_argument("--max-degree", type=int, dest="max_degree")
    return parser


def _config(args, experiment) -> ExperimentConfig:
    file_values = experiments.read_config_file(args.config) if args.config else {}
    flags = {k: v for k, v in vars(args).items() if k in _CFG_FIELDS and v is not None}
    flags["experiment"] = experiment
    return experiments.config_from_mapping(file_values, **flags)


def _graph(cfg, args):
    if getattr(args, "graph_file", None):
        return read_edgelist(args.graph_file)
    return generate(cfg.graph_spec())


def _snapshots(cfg, args, graph=None):
    if getattr(args, "snapshot_file", None):
        return load_snapshots(args.snapshot_file)
    graph = graph or generate(cfg.graph_spec())
    return sample_snapshots(graph, DynamicsSpec(cfg.model), cfg.sim_config(), cfg.snapshots,
                            workers=cfg.workers)


def cmd_gen_graph(args):
    cfg = _config(args, "compare")
    g = generate(cfg.graph_spec())
    write_edgelist(g, Path(cfg.out) / "graph.txt")
    print(f"{g.meta['family']}: n={g.n} edges={g.n_edges} seed={g.meta['seed']}")


def cmd_simulate(args):
    cfg = _config(args, "compare")
    g = _graph(cfg, args)
    snaps = sample_snapshots(g, DynamicsSpec(cfg.model), cfg.sim_config(), cfg.snapshots, workers=cfg.workers)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    write_edgelist(g, out / "graph.txt")
    save_snapshots(snaps, out / "snapshots.txt")
    print(f"wrote {snaps.m} snapshots ({cfg.model}, n={g.n}) to {out / 'snapshots.txt'}")


def cmd_train(args):
    cfg = _config(args, "compare")
    truth = read_edgelist(args.truth) if args.truth else None
    if args.snapshot_file:
        snaps = load_snapshots(args.snapshot_file)
    else:
        truth = truth or generate(cfg.graph_spec())
        snaps = _snapshots(cfg, args, truth)
    rg, net, report = train(snaps, cfg.train_config(), ground_truth=truth)
    out = Path(cfg.out)
    rows = [{"epoch": e, "loss": loss, "graph_loss": report.graph_losses.get(e, ""), "v": v}
            for e, loss, v in zip(report.epochs, report.losses, report.sharpness)]
    atomic_write(out / "train.csv", csv_text(cfg, ["epoch", "loss", "graph_loss", "v"], rows, tag="train"))
    save_checkpoint(out / "checkpoint.txt", rg, net)
    write_edgelist(report.final_graph, out / "inferred_graph.txt")
    msg = f"{len(report.epochs)} epochs, {report.final_graph.n_edges} edges, {report.runtime_s:.1f}s"
    if truth is not None:
        msg += f", graph loss {graph_loss(report.final_graph, truth)}"
    print(msg)


def cmd_baseline(args):
    cfg = _config(args, "compare")
    truth = read_edgelist(args.truth) if args.truth else None
    if args.snapshot_file:
        snaps = load_snapshots(args.snapshot_file)
    else:
        truth = truth or generate(cfg.graph_spec())
        snaps = _snapshots(cfg, args, truth)
    scores = baselines.METHODS[args.method](snaps)
    out = Path(cfg.out)
    # the score matrix stays a plain n x n table; provenance goes in the first line
    atomic_write(out / f"scores_{args.method}.csv",
                 f"# snapnet baseline {args.method} seed={cfg.seed} config={cfg.config_hash()}\n" + scores.to_csv())
    k = args.k if args.k is not None else (truth.n_edges if truth is not None else None)
    if k is None:
        print(f"wrote {args.method} scores; pass --k or --truth to threshold")
        return
    g = baselines.threshold_top_k(scores, k)
    write_edgelist(g, out / f"inferred_{args.method}.txt")
    msg = f"{args.method}: kept {k} edges"
    if truth is not None:
        msg += f", graph loss {graph_loss(g, truth)}"
    print(msg)


def cmd_experiment(args):
    cfg = _config(args, args.command)
    rows = experiments.RUNNERS[args.command](cfg)
    print(f"{args.command}: wrote {len(rows)} rows to {cfg.out}")
    if args.command == "landscape":
        stats = experiments.landscape_stats(rows)
        print(f"spearman(graph loss, mean loss) = {stats['spearman_mean']:.3f}, "
              f"ground truth rank {stats['truth_rank']} of {len(rows)}")


COMMANDS = {"gen-graph": cmd_gen_graph, "simulate": cmd_simulate, "train": cmd_train,
            "baseline": cmd_baseline, "landscape": cmd_experiment, "samplesize": cmd_experiment,
            "compare": cmd_experiment, "surface": cmd_experiment}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(asctime)s %(name)s %(levelname)s %(message)s")
    try:
        COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"snapnet: configuration error: {exc}", file=sys.stderr)
        return 2
    except (DataError, FileNotFoundError) as exc:
        print(f"snapnet: data error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
