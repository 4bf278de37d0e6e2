"""Command-line front end.

Exit codes: 0 success, 2 configuration or input error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .data import (
    SYNTHETIC_KINDS,
    gen_synthetic,
    read_graph_csv,
    read_pgm,
    read_signal_csv,
    write_graph_csv,
    write_signal_csv,
)
from .errors import ConfigError, NumericalError
from .experiment import ExperimentConfig, compare_transforms, run_experiment
from .graph import build_gso
from .learnnet import infer, load_checkpoint
from .metrics import evaluate
from .spectral import JointBases
from .transforms import (
    TRANSFORMS,
    OrderParams,
    dmpjfrft_inverse,
    dmpjfrft_operator,
    parse_transform,
)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3

# ExperimentConfig fields settable from the command line: (flag, field, type)
_EXPERIMENT_FLAGS = [
    ("--task", "task", str),
    ("--gso", "gso", str),
    ("--transform", "transform", str),
    ("--data-source", "data_source", str),
    ("--input", "input_path", str),
    ("--graph", "graph_path", str),
    ("--segment-length", "segment_length", int),
    ("--seed", "seed", int),
    ("--sigma", "sigma", float),
    ("--input-snr-db", "input_snr_db", float),
    ("--n-vertices", "n_vertices", int),
    ("--series-length", "series_length", int),
    ("--synthetic-kind", "synthetic_kind", str),
    ("--patch", "patch", int),
]
_OPTIMIZER_FLAGS = [("--gamma", "gamma", float), ("--epochs", "epochs", int),
                    ("--init-order", "init_order", float)]
_TRAIN_FLAGS = [("--lr", "lr", float), ("--epochs", "epochs", int), ("--batch", "batch", int),
                ("--group-size", "group_size", int), ("--init-order", "init_order", float)]


def _add_experiment_args(p: argparse.ArgumentParser, engine_flags) -> None:
    p.add_argument("--config", help="ExperimentConfig JSON file; flags override it")
    p.add_argument("--out", help="output directory")
    for flag, dest, typ in _EXPERIMENT_FLAGS + engine_flags:
        p.add_argument(flag, dest=f"x_{dest}", type=typ, default=None)


def _experiment_config(args, engine: str, engine_flags, section: str) -> ExperimentConfig:
    base = ExperimentConfig.from_json_file(args.config) if args.config else ExperimentConfig()
    top = {dest: getattr(args, f"x_{dest}") for _, dest, _ in _EXPERIMENT_FLAGS
           if getattr(args, f"x_{dest}") is not None}
    sub = {dest: getattr(args, f"x_{dest}") for _, dest, _ in engine_flags
           if getattr(args, f"x_{dest}") is not None}
    try:
        cfg = replace(base, engine=engine, **top)
        cfg = replace(cfg, **{section: replace(getattr(cfg, section), **sub)})
        if args.out:
            cfg = replace(cfg, out_dir=args.out)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    return cfg


def _summary(record) -> str:
    agg = record.aggregate
    keys = [k for k in ("input_snr_db", "output_snr_db", "input_psnr_db", "output_psnr_db",
                        "input_ssim", "output_ssim") if k in agg]
    return "  ".join(f"{k}={agg[k]:.4f}" for k in keys)


def cmd_gen(args) -> int:
    X, graph = gen_synthetic(args.n, args.t, args.kind, args.seed, support=args.support)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_signal_csv(out / "signal.csv", X)
    write_graph_csv(out / "graph.csv", graph)
    print(f"wrote {out / 'signal.csv'} ({X.shape[0]}x{X.shape[1]}) and {out / 'graph.csv'}")
    return EXIT_OK


def _orders(args, n: int, t: int) -> OrderParams:
    g, d, _ = parse_transform(args.transform)
    if args.orders:
        orders = json.loads(Path(args.orders).read_text())
        return OrderParams(np.asarray(orders["graph_orders"], float), np.asarray(orders["time_orders"], float), g, d)
    return OrderParams.constant(n, t, args.alpha, args.beta, g, d)


def cmd_transform(args) -> int:
    X = read_signal_csv(args.signal)
    graph = read_graph_csv(args.graph)
    bases = JointBases.from_gso(build_gso(graph, args.gso), X.shape[1])
    op = dmpjfrft_operator(_orders(args, X.shape[0], X.shape[1]), bases)
    if args.inverse:
        op = dmpjfrft_inverse(op)
    Y = op.apply_matrix(X)
    write_signal_csv(args.out, Y)
    if args.export_operator:
        Path(args.export_operator).write_text(json.dumps(op.to_dict()))
    print(f"wrote {args.out}")
    return EXIT_OK


def _run(args, engine, flags, section) -> int:
    cfg = _experiment_config(args, engine, flags, section)
    record = run_experiment(cfg)
    print(_summary(record))
    if cfg.out_dir:
        print(f"results in {cfg.out_dir}")
    return EXIT_OK


def cmd_filter_gd(args) -> int:
    return _run(args, "gd", _OPTIMIZER_FLAGS, "optimizer")


def cmd_train(args) -> int:
    return _run(args, "net", _TRAIN_FLAGS, "training")


def cmd_infer(args) -> int:
    model, graph_hash = load_checkpoint(args.checkpoint)
    graph = read_graph_csv(args.graph)
    if graph_hash and graph.hash() != graph_hash:
        raise ConfigError(f"checkpoint was trained on graph {graph_hash}, got {graph.hash()}")
    Y = read_signal_csv(args.signal)
    bases = JointBases.from_gso(build_gso(graph, args.gso), Y.shape[1])
    write_signal_csv(args.out, infer(model, Y, bases))
    print(f"wrote {args.out}")
    return EXIT_OK


def _read_any(path: str) -> np.ndarray:
    return read_pgm(path) if path.lower().endswith(".pgm") else read_signal_csv(path)


def cmd_metrics(args) -> int:
    ref, est = _read_any(args.reference), _read_any(args.estimate)
    images = args.images or args.reference.lower().endswith(".pgm")
    print(json.dumps(evaluate(ref, est, images=images).to_dict(), indent=2))
    return EXIT_OK


def cmd_compare(args) -> int:
    base = ExperimentConfig.from_json_file(args.config) if args.config else ExperimentConfig()
    if args.epochs is not None:
        base = replace(base, optimizer=replace(base.optimizer, epochs=args.epochs),
                       training=replace(base.training, epochs=args.epochs))
    if args.engine:
        base = replace(base, engine=args.engine)
    sigmas = [float(s) for s in args.sigmas] if args.sigmas else [base.sigma]
    rows = compare_transforms(base, args.gsos, sigmas, args.transforms, args.out, args.workers)
    for r in rows:
        print(f"{r['gso']:>32} sigma={r['sigma']} {r['transform']:>14} "
              f"in={r['input_snr']:.3f} out={r['output_snr']:.3f}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dmpjfrft", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a synthetic signal and graph")
    p.add_argument("--n", type=int, default=16)
    p.add_argument("--t", type=int, default=30)
    p.add_argument("--kind", choices=SYNTHETIC_KINDS, default="smooth_graph")
    p.add_argument("--support", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("transform", help="apply a joint transform to a signal CSV")
    p.add_argument("--signal", required=True)
    p.add_argument("--graph", required=True)
    p.add_argument("--gso", default="adjacency")
    p.add_argument("--transform", choices=TRANSFORMS, default="dmpjfrft_i_i")
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--orders", help="JSON with graph_orders (N x T) and time_orders (T)")
    p.add_argument("--inverse", action="store_true")
    p.add_argument("--export-operator", help="write the factored operator as JSON")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_transform)

    p = sub.add_parser("filter-gd", help="gradient-descent filtering experiment")
    _add_experiment_args(p, _OPTIMIZER_FLAGS)
    p.set_defaults(func=cmd_filter_gd)

    p = sub.add_parser("train", help="train / validate / test experiment")
    _add_experiment_args(p, _TRAIN_FLAGS)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("infer", help="restore a corrupted signal with a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--signal", required=True)
    p.add_argument("--graph", required=True)
    p.add_argument("--gso", default="adjacency")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("metrics", help="compare an estimate against a reference (CSV or PGM)")
    p.add_argument("--reference", required=True)
    p.add_argument("--estimate", required=True)
    p.add_argument("--images", action="store_true", help="also report PSNR and SSIM")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("compare", help="SNR table over a grid of GSOs, noise levels and transforms")
    p.add_argument("--config")
    p.add_argument("--engine", choices=("gd", "net"))
    p.add_argument("--gsos", nargs="+", default=["adjacency"])
    p.add_argument("--sigmas", nargs="*", type=float)
    p.add_argument("--transforms", nargs="+", default=["jfrft", "dmpjfrft_i_i"])
    p.add_argument("--epochs", type=int)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", help="CSV path")
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
