"""Experiment orchestration: load or generate, segment, degrade, filter, evaluate, write."""

from __future__ import annotations

import csv
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .data import (
    SYNTHETIC_KINDS,
    gen_synthetic,
    read_graph_csv,
    read_pgm_sequence,
    read_signal_csv,
    write_pgm,
    write_signal_csv,
)
from .errors import ConfigError, DmpjfrftError, TooFewSamples
from .filtering import (
    Degradation,
    FilterModel,
    OptimizerConfig,
    add_noise,
    blur_frames,
    degrade,
    gd_filter_batch,
    graph_blur_matrix,
    sigma_for_snr,
)
from .graph import Graph, GsoKind, build_gso, patch_graph, patchify, segment_series, unpatchify
from .learnnet import (
    MIN_SAMPLES,
    TrainConfig,
    reconstruct_batch,
    save_checkpoint,
    split_dataset,
    train,
    write_history_csv,
)
from .metrics import evaluate
from .spectral import JointBases
from .transforms import parse_transform

TASKS = ("denoise", "deblur")
ENGINES = ("gd", "net")
SOURCES = ("synthetic", "csv_signals", "pgm_video")


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to reproduce one run.

    ``sigma`` is the noise std in signal units; when it is None the noise
    level is set from ``input_snr_db`` (denoise) or disabled (deblur).
    For video, ``segment_length`` is the number of frames per clip.
    """

    task: str = "denoise"
    engine: str = "gd"
    gso: str = "adjacency"
    transform: str = "dmpjfrft_i_i"
    data_source: str = "synthetic"
    input_path: str | None = None
    graph_path: str | None = None
    out_dir: str | None = None
    segment_length: int = 10
    seed: int = 0
    sigma: float | None = None
    input_snr_db: float = 0.0
    n_vertices: int = 16
    series_length: int = 30
    synthetic_kind: str = "smooth_graph"
    patch: int = 16
    knn: int = 4
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    training: TrainConfig = field(default_factory=TrainConfig)

    def __post_init__(self):
        checks = [
            (self.task in TASKS, f"task must be one of {TASKS}"),
            (self.engine in ENGINES, f"engine must be one of {ENGINES}"),
            (self.data_source in SOURCES, f"data_source must be one of {SOURCES}"),
            (self.synthetic_kind in SYNTHETIC_KINDS, f"synthetic_kind must be one of {SYNTHETIC_KINDS}"),
            (self.segment_length >= 1, "segment_length must be positive"),
            (self.sigma is None or self.sigma >= 0, "sigma must be nonnegative"),
            (self.data_source == "synthetic" or self.input_path, "input_path is required for file data"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ConfigError(msg)
        try:
            GsoKind.parse(self.gso)
            parse_transform(self.transform)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        try:
            opt = OptimizerConfig(**d.pop("optimizer", {}))
            trn = TrainConfig(**d.pop("training", {}))
            return cls(optimizer=opt, training=trn, **d)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid experiment config: {exc}") from exc

    @classmethod
    def from_json_file(cls, path) -> "ExperimentConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass
class ResultRecord:
    config: dict
    per_signal: list  # dicts {"index", "input": MetricReport, "output": MetricReport}
    aggregate: dict
    seconds: float
    loss_trace_path: str | None = None
    initial_loss: float = math.nan

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "per_signal": [
                {"index": r["index"], "input": r["input"].to_dict(), "output": r["output"].to_dict()}
                for r in self.per_signal
            ],
            "aggregate": {k: ("inf" if math.isinf(v) else v) for k, v in self.aggregate.items()},
            "seconds": self.seconds,
            "loss_trace_path": self.loss_trace_path,
            "initial_loss": self.initial_loss,
        }


def _aggregate(per_signal) -> dict:
    out = {}
    for side in ("input", "output"):
        for key in ("mse", "snr_db", "psnr_db", "ssim"):
            vals = [getattr(r[side], key) for r in per_signal]
            if vals and all(v is not None for v in vals):
                out[f"{side}_{key}"] = float(np.mean(vals))
    return out


class _Stage:
    """Re-raise package errors with the failing stage name prefixed."""

    def __init__(self, name: str):
        self.name = name

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc is not None and isinstance(exc, DmpjfrftError) and not str(exc).startswith("["):
            raise type(exc)(f"[{self.name}] {exc}") from exc
        return False


@dataclass
class _Workload:
    clean: np.ndarray          # (M, N, T)
    corrupted: np.ndarray      # (M, N, T)
    graph: Graph
    video: dict | None = None  # frame bookkeeping for pgm_video


def _noise_sigma(cfg: ExperimentConfig, reference) -> float:
    if cfg.sigma is not None:
        return cfg.sigma
    return sigma_for_snr(reference, cfg.input_snr_db) if cfg.task == "denoise" else 0.0


def _load_signals(cfg: ExperimentConfig) -> _Workload:
    if cfg.data_source == "synthetic":
        series, graph = gen_synthetic(cfg.n_vertices, cfg.series_length, cfg.synthetic_kind, cfg.seed)
    else:
        series = read_signal_csv(cfg.input_path)
        if cfg.graph_path is None:
            raise ConfigError("csv_signals needs graph_path (adjacency CSV)")
        graph = read_graph_csv(cfg.graph_path)
    segments = segment_series(series, cfg.segment_length)
    if not segments:
        raise ConfigError(f"series of length {series.shape[1]} is shorter than one segment")
    clean = np.stack(segments)
    sigma = _noise_sigma(cfg, clean)
    if cfg.task == "denoise":
        if sigma <= 0:
            raise ConfigError("denoise needs a positive noise level")
        d = Degradation("additive_noise", sigma)
    else:
        d = Degradation("blur", sigma, graph_blur_matrix(graph))
    corrupted = np.stack([degrade(x, d, cfg.seed * 1_000_003 + i) for i, x in enumerate(clean)])
    return _Workload(clean, corrupted, graph)


def _load_video(cfg: ExperimentConfig) -> _Workload:
    frames = read_pgm_sequence(cfg.input_path)
    n_clips = len(frames) // cfg.segment_length
    if n_clips == 0:
        raise ConfigError(f"{len(frames)} frames are fewer than one clip of {cfg.segment_length}")
    H, W = frames[0].shape
    sigma = _noise_sigma(cfg, np.stack(frames))
    clean, corrupted = [], []
    for c in range(n_clips):
        clip = frames[c * cfg.segment_length:(c + 1) * cfg.segment_length]
        rng = np.random.default_rng(cfg.seed * 1_000_003 + c)
        if cfg.task == "deblur":
            bad = blur_frames(clip, cfg.optimizer.blur_kernel_size, cfg.optimizer.blur_sigma)
            bad = [add_noise(f, sigma, rng) for f in bad] if sigma > 0 else bad
        else:
            if sigma <= 0:
                raise ConfigError("denoise needs a positive noise level")
            bad = [add_noise(f, sigma, rng) for f in clip]
        clean.extend(patchify(clip, cfg.patch))
        corrupted.extend(patchify(bad, cfg.patch))
    graph = patch_graph(cfg.patch, cfg.knn)
    video = {"height": H, "width": W, "clips": n_clips, "per_clip": len(clean) // n_clips}
    return _Workload(np.stack(clean), np.stack(corrupted), graph, video)


def _frames_of(signals, video: dict, cfg: ExperimentConfig) -> list[np.ndarray]:
    """Per-clip stacks of frames rebuilt from patch signals."""
    k = video["per_clip"]
    return [
        np.stack(unpatchify(list(signals[c * k:(c + 1) * k]), video["height"], video["width"],
                            cfg.patch, cfg.segment_length))
        for c in range(video["clips"])
    ]


def _write_trace(path: Path, losses) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["epoch", "loss"])
        for e, v in enumerate(losses):
            w.writerow([e, repr(float(v))])


def _write_metrics(path: Path, per_signal) -> None:
    keys = ("mse", "snr_db", "psnr_db", "ssim")
    present = [k for k in keys if getattr(per_signal[0]["input"], k) is not None] if per_signal else list(keys[:2])
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["index"] + [f"input_{k}" for k in present] + [f"output_{k}" for k in present])
        for r in per_signal:
            w.writerow([r["index"]] + [getattr(r["input"], k) for k in present]
                       + [getattr(r["output"], k) for k in present])


def run_experiment(cfg: ExperimentConfig) -> ResultRecord:
    """Run one configured experiment; writes outputs when ``cfg.out_dir`` is set."""
    start = time.perf_counter()
    with _Stage("load"):
        work = _load_video(cfg) if cfg.data_source == "pgm_video" else _load_signals(cfg)
    M, N, T = work.clean.shape
    if cfg.engine == "net" and M < MIN_SAMPLES:
        raise TooFewSamples(f"[split] engine=net needs at least {MIN_SAMPLES} segments, got {M}")
    with _Stage("decompose"):
        bases = JointBases.from_gso(build_gso(work.graph, cfg.gso), T)

    out_dir = Path(cfg.out_dir) if cfg.out_dir else None
    if out_dir:
        out_dir.mkdir(parents=True, exist_ok=True)

    with _Stage("filter"):
        if cfg.engine == "gd":
            opt = replace(cfg.optimizer, transform=cfg.transform)
            runs = gd_filter_batch(work.corrupted, work.clean, opt, bases)
            restored = np.stack([
                reconstruct_batch(work.corrupted[m:m + 1], r.model, bases)[0] for m, r in enumerate(runs)
            ])
            trace = np.mean([r.loss_trace for r in runs], axis=0)
            evaluated = range(M)
            initial_loss = float(trace[0])
        else:
            trn = replace(cfg.training, transform=cfg.transform)
            pairs = list(zip(work.clean, work.corrupted))
            split = split_dataset(pairs, seed=cfg.seed)
            result = train(split, trn, bases)
            restored = reconstruct_batch(work.corrupted, result.model, bases)
            trace = [h["train_loss"] for h in result.history]
            evaluated = split.indices["test"]
            init = reconstruct_batch(np.stack([y for _, y in split.train]), _initial_model(trn, bases), bases)
            initial_loss = float(np.mean(np.abs(init - np.stack([c for c, _ in split.train])) ** 2))

    with _Stage("evaluate"):
        per_signal = []
        if work.video is None:
            for m in evaluated:
                per_signal.append({
                    "index": int(m),
                    "input": evaluate(work.clean[m], work.corrupted[m]),
                    "output": evaluate(work.clean[m], restored[m]),
                })
        else:
            clean_f = _frames_of(work.clean, work.video, cfg)
            bad_f = _frames_of(work.corrupted, work.video, cfg)
            out_f = _frames_of(restored, work.video, cfg)
            for c in range(work.video["clips"]):
                per_signal.append({
                    "index": c,
                    "input": evaluate(clean_f[c], bad_f[c], images=True),
                    "output": evaluate(clean_f[c], out_f[c], images=True),
                })

    record = ResultRecord(cfg.to_dict(), per_signal, _aggregate(per_signal),
                          time.perf_counter() - start, None, initial_loss)

    if out_dir:
        with _Stage("write"):
            trace_path = out_dir / "loss_trace.csv"
            _write_trace(trace_path, trace)
            record.loss_trace_path = str(trace_path)
            _write_metrics(out_dir / "metrics.csv", per_signal)
            if cfg.engine == "net":
                write_history_csv(out_dir / "history.csv", result.history)
                save_checkpoint(out_dir / "model.json", result.model, work.graph.hash())
            if work.video is None:
                write_signal_csv(out_dir / "restored.csv", np.concatenate(list(restored), axis=1))
            else:
                for c, clip in enumerate(_frames_of(restored, work.video, cfg)):
                    for f, frame in enumerate(clip):
                        write_pgm(out_dir / f"restored_{c:03d}_{f:03d}.pgm", frame)
            (out_dir / "results.json").write_text(json.dumps(record.to_dict(), indent=2))
    return record


def _initial_model(trn: TrainConfig, bases: JointBases) -> FilterModel:
    return FilterModel.initial(bases.n, bases.t, trn.transform, trn.init_order, trn.init_filter)


COMPARE_HEADER = ["gso", "sigma", "transform", "input_snr", "output_snr", "initial_loss"]


def compare_transforms(base: ExperimentConfig, gsos=(), sigmas=(), transforms=(),
                       out_csv=None, workers: int = 1) -> list[dict]:
    """One row per (GSO, sigma, transform); every transform sees the same corrupted inputs.

    Rows are returned (and written) in grid order regardless of ``workers``.
    """
    grid = [(g, s, t) for g in gsos for s in sigmas for t in transforms]

    def cell(item):
        g, s, t = item
        rec = run_experiment(replace(base, gso=g, sigma=s, transform=t, out_dir=None))
        return {
            "gso": GsoKind.parse(g).value,
            "sigma": s,
            "transform": t,
            "input_snr": rec.aggregate["input_snr_db"],
            "output_snr": rec.aggregate["output_snr_db"],
            "initial_loss": rec.initial_loss,
        }

    if workers > 1 and len(grid) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(cell, grid))
    else:
        rows = [cell(item) for item in grid]

    if out_csv is not None:
        with open(out_csv, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=COMPARE_HEADER)
            w.writeheader()
            w.writerows(rows)
    return rows
