"""Train / validate / test pipeline for one shared transform + diagonal filter layer."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .errors import DivergedLoss, ShapeMismatch, TooFewSamples
from .filtering import FilterModel, GradState, joint_pass, reconstruct, vec
from .metrics import snr
from .spectral import JointBases
from .transforms import OrderParams, parse_transform

MIN_SAMPLES = 5


@dataclass(frozen=True, eq=False)
class DatasetSplit:
    """Lists of ``(clean, corrupted)`` pairs plus the original indices of each part."""

    train: list
    val: list
    test: list
    split_seed: int
    indices: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.indices:
            parts = [set(self.indices.get(k, ())) for k in ("train", "val", "test")]
            if parts[0] & parts[1] or parts[0] & parts[2] or parts[1] & parts[2]:
                raise ValueError("train, val and test must be disjoint")

    @property
    def test_corrupted(self) -> list:
        return [c for _, c in self.test]


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def split_dataset(pairs, ratios=(0.2, 0.2), seed: int = 0) -> DatasetSplit:
    """Seeded shuffle, then test / train / val partition.

    ``ratios = (test_fraction, val_fraction_of_remainder)``; counts are
    rounded half up and the rest goes to training.
    """
    pairs = list(pairs)
    n = len(pairs)
    if n < MIN_SAMPLES:
        raise TooFewSamples(f"need at least {MIN_SAMPLES} pairs, got {n}")
    test_frac, val_frac = ratios
    if not (0 < test_frac < 1 and 0 < val_frac < 1):
        raise ValueError("ratios must lie strictly between 0 and 1")
    perm = np.random.default_rng(seed).permutation(n)
    n_test = max(1, _round_half_up(n * test_frac))
    n_val = max(1, _round_half_up((n - n_test) * val_frac))
    if n - n_test - n_val < 1:
        raise TooFewSamples("no samples left for training")
    test_idx = perm[:n_test]
    val_idx = perm[n_test + (n - n_test - n_val):]
    train_idx = perm[n_test:n_test + (n - n_test - n_val)]
    pick = lambda idx: [pairs[i] for i in idx]  # noqa: E731
    return DatasetSplit(pick(train_idx), pick(val_idx), pick(test_idx), seed,
                        {"train": train_idx.tolist(), "val": val_idx.tolist(), "test": test_idx.tolist()})


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 0.001
    epochs: int = 200
    batch: int = 16
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    seed: int = 0
    group_size: int = 1  # recorded only
    optimizer: str = "adam"
    transform: str = "dmpjfrft_i_i"
    init_order: float = 0.5
    init_filter: float = 1.0

    def __post_init__(self):
        if not self.lr > 0:
            raise ValueError("lr must be positive")
        if self.epochs < 1 or self.batch < 1 or self.group_size < 1:
            raise ValueError("epochs, batch and group_size must be positive")
        if not (0 < self.adam_beta1 < 1 and 0 < self.adam_beta2 < 1):
            raise ValueError("Adam betas must lie in (0, 1)")
        if not self.adam_eps > 0:
            raise ValueError("adam_eps must be positive")
        if self.optimizer not in ("adam", "gd"):
            raise ValueError("optimizer must be 'adam' or 'gd'")
        parse_transform(self.transform)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "TrainConfig":
        return cls(**json.loads(text))


# ---------------------------------------------------------------------------
# Adam over the flattened real parameter vector (A | b | Re h | Im h)


def flatten_params(model: FilterModel) -> np.ndarray:
    p = model.params
    return np.concatenate([p.graph_orders.ravel(), p.time_orders, model.h_diag.real, model.h_diag.imag])


def flatten_grads(grads: GradState) -> np.ndarray:
    return np.concatenate([grads.grad_A.ravel(), grads.grad_b, grads.grad_h.real, grads.grad_h.imag])


def unflatten_params(theta: np.ndarray, like: FilterModel, step: int) -> FilterModel:
    n, t = like.params.n, like.params.t
    i = n * t
    A = theta[:i].reshape(n, t)
    b = theta[i:i + t]
    h = theta[i + t:i + t + n * t] + 1j * theta[i + t + n * t:]
    params = OrderParams(A, b, like.params.g_type, like.params.d_type)
    return FilterModel(params, h, step, like.tied)


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0

    @classmethod
    def zeros(cls, size: int) -> "AdamState":
        return cls(np.zeros(size), np.zeros(size), 0)


def adam_step(model: FilterModel, state: AdamState, grads: GradState,
              config: TrainConfig) -> tuple[FilterModel, AdamState]:
    """One bias-corrected Adam update; returns the new model and moment state."""
    g = flatten_grads(grads)
    if g.shape != state.m.shape:
        raise ShapeMismatch("moment buffers do not match the parameter vector")
    b1, b2 = config.adam_beta1, config.adam_beta2
    t = state.t + 1
    m = b1 * state.m + (1 - b1) * g
    v = b2 * state.v + (1 - b2) * g * g
    m_hat = m / (1 - b1 ** t)
    v_hat = v / (1 - b2 ** t)
    theta = flatten_params(model) - config.lr * m_hat / (np.sqrt(v_hat) + config.adam_eps)
    return unflatten_params(theta, model, model.step + 1), AdamState(m, v, t)


def gd_step(model: FilterModel, grads: GradState, lr: float) -> FilterModel:
    theta = flatten_params(model) - lr * flatten_grads(grads)
    return unflatten_params(theta, model, model.step + 1)


# ---------------------------------------------------------------------------
# training


def _stack(pairs, bases: JointBases):
    if not pairs:
        raise TooFewSamples("empty sample list")
    clean = np.stack([np.asarray(c) for c, _ in pairs])
    noisy = np.stack([np.asarray(y) for _, y in pairs])
    if clean.shape[1:] != (bases.n, bases.t) or noisy.shape != clean.shape:
        raise ShapeMismatch(f"all signals must be {bases.n}x{bases.t}")
    return clean, noisy


def batch_gradients(Y, X, model: FilterModel, bases: JointBases) -> GradState:
    """Gradient of the batch-mean MSE for a model shared by a stack of signals."""
    p = model.params
    res = joint_pass(Y, X, p.graph_orders, p.time_orders, model.h_matrix, bases,
                     p.g_type, p.d_type, per_sample=False)
    gA, gb = res.grad_A, res.grad_b
    if model.tied:
        gA = np.full_like(gA, gA.sum())
        gb = np.full_like(gb, gb.sum())
    return GradState(gA, gb, vec(res.grad_h), float(np.mean(res.losses)))


def reconstruct_batch(Y, model: FilterModel, bases: JointBases) -> np.ndarray:
    p = model.params
    return joint_pass(Y, None, p.graph_orders, p.time_orders, model.h_matrix, bases,
                      p.g_type, p.d_type, grad=False).X_hat


@dataclass
class TrainResult:
    model: FilterModel
    best_epoch: int
    history: list = field(default_factory=list)  # dicts: epoch, train_loss, val_mse, val_snr
    final_model: FilterModel | None = None


def _validate(model, clean, noisy, bases):
    X_hat = reconstruct_batch(noisy, model, bases)
    mses = np.mean(np.abs(X_hat - clean) ** 2, axis=(1, 2))
    snrs = [snr(c, xh) for c, xh in zip(clean, X_hat)]
    return float(np.mean(mses)), float(np.mean(snrs))


def train(split: DatasetSplit, config: TrainConfig, bases: JointBases) -> TrainResult:
    """Mini-batch training of one shared model; keeps the best-validation-MSE snapshot.

    Batches are drawn from a per-epoch permutation of the training set
    (seeded by ``config.seed``); the batch gradient is the mean of the
    per-sample gradients.
    """
    clean, noisy = _stack(split.train, bases)
    v_clean, v_noisy = _stack(split.val, bases)
    rng = np.random.default_rng(config.seed)
    model = FilterModel.initial(bases.n, bases.t, config.transform, config.init_order, config.init_filter)
    state = AdamState.zeros(flatten_params(model).size)
    best, best_mse, best_epoch = model, math.inf, 0
    history = []
    n = clean.shape[0]

    for epoch in range(1, config.epochs + 1):
        perm = rng.permutation(n)
        total = 0.0
        for start in range(0, n, config.batch):
            idx = perm[start:start + config.batch]
            grads = batch_gradients(noisy[idx], clean[idx], model, bases)
            if not math.isfinite(grads.loss):
                raise DivergedLoss(f"training loss became non-finite at epoch {epoch}")
            total += grads.loss * idx.size
            if config.optimizer == "adam":
                model, state = adam_step(model, state, grads, config)
            else:
                model = gd_step(model, grads, config.lr)
        val_mse, val_snr = _validate(model, v_clean, v_noisy, bases)
        if not math.isfinite(val_mse):
            raise DivergedLoss(f"validation loss became non-finite at epoch {epoch}")
        history.append({"epoch": epoch, "train_loss": total / n, "val_mse": val_mse, "val_snr": val_snr})
        if val_mse < best_mse:
            best, best_mse, best_epoch = model, val_mse, epoch
    return TrainResult(best, best_epoch, history, model)


def infer(model: FilterModel, corrupted, bases: JointBases) -> np.ndarray:
    """Restore a corrupted signal with frozen parameters."""
    return reconstruct(corrupted, model, bases)


# ---------------------------------------------------------------------------
# persistence


def save_checkpoint(path, model: FilterModel, graph_hash: str) -> None:
    payload = model.to_dict()
    payload["graph_hash"] = graph_hash
    Path(path).write_text(json.dumps(payload, indent=2))


def load_checkpoint(path) -> tuple[FilterModel, str]:
    d = json.loads(Path(path).read_text())
    return FilterModel.from_dict(d), d.get("graph_hash", "")


def write_history_csv(path, history) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["epoch", "train_loss", "val_mse", "val_snr"])
        for row in history:
            w.writerow([row["epoch"], repr(row["train_loss"]), repr(row["val_mse"]), repr(row["val_snr"])])
