"""Degradation models and the learnable diagonal filter in the joint spectral domain.

The reconstruction is ``inverse(F_J) H F_J vec(Y)`` with a complex diagonal
``H``.  Both the forward pass and its gradient are evaluated in the
eigenbases of the GFT and DFT matrices: every graph block is
``V diag(phi_i) V^-1`` and the time factor is ``W diag(g) W^-1``, so a
single batched pipeline of matrix products covers all four transform types.
The gradient is a hand-written reverse pass through that pipeline.

Complex adjoints follow the convention ``Mbar = dL/dRe M + i dL/dIm M``,
so ``dL = Re sum(conj(Mbar) dM)``.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import ndimage

from .errors import DivergedLoss, NonDifferentiablePoint, ShapeMismatch
from .graph import Graph, check_signal
from .serialize import decode_complex, encode_complex
from .spectral import ZERO_TOL, JointBases
from .transforms import (
    OrderParams,
    _k_power_phases,
    dmpjfrft_inverse,
    dmpjfrft_operator,
    graph_gains,
    parse_transform,
    time_gains,
)

KERNEL_SUM_TOL = 1e-12


# ---------------------------------------------------------------------------
# degradation


@dataclass(frozen=True, eq=False)
class Degradation:
    """``additive_noise``: ``Y = X + N``.  ``blur``: ``Y = K X`` (plus noise when ``sigma > 0``)."""

    kind: str
    sigma: float = 0.0
    kernel: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in ("additive_noise", "blur"):
            raise ValueError(f"unknown degradation kind {self.kind!r}")
        if not np.isfinite(self.sigma) or self.sigma < 0:
            raise ValueError("sigma must be a finite nonnegative number")
        if self.kind == "additive_noise":
            if self.kernel is not None:
                raise ValueError("additive_noise takes no kernel")
            if self.sigma <= 0:
                raise ValueError("additive_noise needs sigma > 0")
            return
        if self.kernel is None:
            raise ValueError("blur needs a kernel")
        K = np.array(self.kernel, dtype=float)
        if K.ndim != 2 or K.shape[0] != K.shape[1]:
            raise ShapeMismatch(f"blur kernel must be square, got {K.shape}")
        if np.max(np.abs(K.sum(axis=1) - 1.0)) > KERNEL_SUM_TOL:
            raise ValueError("blur kernel rows must sum to 1")
        K.setflags(write=False)
        object.__setattr__(self, "kernel", K)


def add_noise(X, sigma: float, rng: np.random.Generator) -> np.ndarray:
    """Add i.i.d. Gaussian noise; complex input gets independent real and imaginary noise."""
    X = np.asarray(X)
    noise = rng.normal(0.0, sigma, X.shape)
    if np.iscomplexobj(X):
        noise = noise + 1j * rng.normal(0.0, sigma, X.shape)
    return X + noise


def degrade(X, d: Degradation, seed: int) -> np.ndarray:
    """Apply a degradation with a seeded generator (deterministic per seed)."""
    X = check_signal(X)
    rng = np.random.default_rng(seed)
    if d.kind == "additive_noise":
        return add_noise(X, d.sigma, rng)
    if d.kernel.shape[0] != X.shape[0]:
        raise ShapeMismatch(f"kernel is {d.kernel.shape} but the signal has {X.shape[0]} rows")
    Y = d.kernel @ X
    return add_noise(Y, d.sigma, rng) if d.sigma > 0 else Y


def sigma_for_snr(X, snr_db: float) -> float:
    """Noise std giving the requested expected input SNR."""
    X = np.asarray(X)
    power = np.mean(np.abs(X) ** 2)
    per_component = 2.0 if np.iscomplexobj(X) else 1.0
    return float(np.sqrt(power / (10.0 ** (snr_db / 10.0) * per_component)))


def gaussian_kernel(size: int = 15, sigma: float = 2.5) -> np.ndarray:
    if size < 1 or size % 2 == 0:
        raise ValueError("kernel size must be a positive odd integer")
    if sigma <= 0:
        raise ValueError("blur sigma must be positive")
    r = np.arange(size) - size // 2
    k = np.exp(-0.5 * (r / sigma) ** 2)
    return k / k.sum()


def blur_matrix_1d(n: int, size: int = 15, sigma: float = 2.5) -> np.ndarray:
    """1-D Gaussian blur of length-``n`` signals with replicate padding, as a matrix."""
    k = gaussian_kernel(size, sigma)
    half = size // 2
    B = np.zeros((n, n))
    for i in range(n):
        cols = np.clip(np.arange(i - half, i + half + 1), 0, n - 1)
        np.add.at(B[i], cols, k)
    return B


def frame_blur_matrix(height: int, width: int | None = None, size: int = 15,
                      sigma: float = 2.5) -> np.ndarray:
    """Separable Gaussian blur acting on row-major vectorized frames."""
    width = height if width is None else width
    return np.kron(blur_matrix_1d(height, size, sigma), blur_matrix_1d(width, size, sigma))


def blur_frames(frames, size: int = 15, sigma: float = 2.5) -> list[np.ndarray]:
    """Gaussian blur of whole frames with replicate boundaries (same kernel as the matrices)."""
    k = gaussian_kernel(size, sigma)
    out = []
    for f in frames:
        f = np.asarray(f, dtype=float)
        f = ndimage.correlate1d(f, k, axis=0, mode="nearest")
        out.append(ndimage.correlate1d(f, k, axis=1, mode="nearest"))
    return out


def graph_blur_matrix(graph: Graph) -> np.ndarray:
    """Neighbourhood averaging ``K = rownorm(I + A)`` used to blur graph signals."""
    M = np.eye(graph.n_vertices) + graph.adjacency
    return M / M.sum(axis=1, keepdims=True)


# ---------------------------------------------------------------------------
# model and configuration


def vec(X) -> np.ndarray:
    """Column-stacking vectorization."""
    return np.asarray(X).reshape(-1, order="F")


def unvec(x, n: int, t: int) -> np.ndarray:
    return np.asarray(x).reshape(n, t, order="F")


@dataclass(frozen=True, eq=False)
class FilterModel:
    """Orders plus the diagonal filter ``h_diag`` (vectorized, length ``N*T``).

    ``tied`` marks the single-order JFRFT: every graph order equals one
    ``alpha`` and every temporal order equals one ``beta``.
    """

    params: OrderParams
    h_diag: np.ndarray
    step: int = 0
    tied: bool = False

    def __post_init__(self):
        h = np.array(self.h_diag, dtype=complex).ravel()
        if h.shape[0] != self.params.n * self.params.t:
            raise ShapeMismatch(f"h_diag has {h.shape[0]} entries, expected {self.params.n * self.params.t}")
        if not np.all(np.isfinite(h)):
            raise ValueError("h_diag must be finite")
        if self.step < 0:
            raise ValueError("step must be nonnegative")
        h.setflags(write=False)
        object.__setattr__(self, "h_diag", h)

    @classmethod
    def initial(cls, n: int, t: int, transform: str = "dmpjfrft_i_i",
                init_order: float = 0.5, init_filter: complex = 1.0) -> "FilterModel":
        g, d, tied = parse_transform(transform)
        params = OrderParams.constant(n, t, init_order, init_order, g, d)
        return cls(params, np.full(n * t, init_filter, dtype=complex), 0, tied)

    @property
    def h_matrix(self) -> np.ndarray:
        return unvec(self.h_diag, self.params.n, self.params.t)

    @property
    def transform(self) -> str:
        if self.tied:
            return "jfrft"
        return f"dmpjfrft_{self.params.g_type.lower()}_{self.params.d_type.lower()}"

    def to_dict(self) -> dict:
        return {
            "transform": self.transform,
            "g_type": self.params.g_type,
            "d_type": self.params.d_type,
            "tied": self.tied,
            "step": self.step,
            "graph_orders": self.params.graph_orders.tolist(),
            "time_orders": self.params.time_orders.tolist(),
            "h_diag": encode_complex(self.h_diag),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FilterModel":
        params = OrderParams(np.asarray(d["graph_orders"], dtype=float),
                             np.asarray(d["time_orders"], dtype=float), d["g_type"], d["d_type"])
        return cls(params, decode_complex(d["h_diag"]), int(d["step"]), bool(d.get("tied", False)))


@dataclass(frozen=True)
class GradState:
    grad_A: np.ndarray
    grad_b: np.ndarray
    grad_h: np.ndarray
    loss: float


@dataclass(frozen=True)
class OptimizerConfig:
    """Plain gradient-descent settings; the blur fields describe the degradation."""

    gamma: float = 0.01
    epochs: int = 1000
    init_order: float = 0.5
    init_filter: float = 1.0
    seed: int = 0
    sigma: float = 0.0
    blur_kernel_size: int = 15
    blur_sigma: float = 2.5
    transform: str = "dmpjfrft_i_i"

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")
        if self.epochs < 0:
            raise ValueError("epochs must be nonnegative")
        parse_transform(self.transform)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "OptimizerConfig":
        return cls(**json.loads(text))


# ---------------------------------------------------------------------------
# reconstruction and loss


def reconstruct(Y, model: FilterModel, bases: JointBases) -> np.ndarray:
    """Forward joint transform, multiply by ``h_diag``, inverse transform."""
    Y = check_signal(Y, bases.n, bases.t)
    op = dmpjfrft_operator(model.params, bases)
    spectrum = op.apply(vec(Y))
    return unvec(dmpjfrft_inverse(op).apply(model.h_diag * spectrum), bases.n, bases.t)


def mse_loss(X_hat, X) -> float:
    X_hat, X = np.asarray(X_hat), np.asarray(X)
    if X_hat.shape != X.shape:
        raise ShapeMismatch(f"shapes differ: {X_hat.shape} vs {X.shape}")
    return float(np.sum(np.abs(X_hat - X) ** 2).real / X.size)


# ---------------------------------------------------------------------------
# batched spectral forward / reverse pass


@dataclass
class _Pass:
    X_hat: np.ndarray
    losses: np.ndarray
    grad_A: np.ndarray | None = None
    grad_b: np.ndarray | None = None
    grad_h: np.ndarray | None = None


def _graph_factor_grad(bases: JointBases, A, phi, phi_bar, g_type):
    loglam = bases.gft.log_values()
    if g_type == "I":
        return np.real(np.conj(phi_bar) * phi * loglam[:, None])
    # phi = Wv C, C[n, i] = sum_j P[n, j] exp(A[n, i] loglam_j)
    P = bases.vandermonde.p_matrix
    Wv = np.vander(bases.gft.values, bases.n, increasing=True)
    C_bar = np.einsum("kn,...kt->...nt", Wv.conj(), phi_bar)
    E = np.exp(A[..., None] * loglam)
    dC = np.einsum("nj,...ntj->...nt", P, E * loglam)
    return np.real(np.conj(C_bar) * dC)


def _time_factor_grad(bases: JointBases, b, g, g_bar, d_type):
    if d_type == "I":
        return np.real(np.conj(g_bar) * g * bases.dft.log_values())
    # D_t(b) = (1/T) sum_m exp(2 pi i m x / T), x = t - T b / 4
    T = bases.t
    t = np.arange(T)
    m = np.arange(T)
    x = t - 0.25 * T * b
    phase = np.exp(2j * np.pi * m * x[..., None] / T)  # (..., T_t, T_m)
    dD = np.sum((-0.5j * np.pi * m) * phase, axis=-1) / T
    c_bar = np.einsum("kt,...k->...t", _k_power_phases(bases.dft).conj(), g_bar)
    return np.real(np.conj(c_bar) * dD)


def joint_pass(Y, X, A, b, H, bases: JointBases, g_type: str = "I", d_type: str = "I",
               per_sample: bool = False, grad: bool = True) -> _Pass:
    """Reconstruct a stack of signals and optionally back-propagate the MSE.

    Parameters
    ----------
    Y, X : arrays ``(M, N, T)``
        Corrupted inputs and references (``X`` may be None when ``grad`` is False).
    A, b, H : arrays
        Graph orders ``(N, T)``, temporal orders ``(T,)`` and filter ``(N, T)``,
        each with a leading ``M`` axis when ``per_sample`` is set.
    per_sample : bool
        True: independent parameters per signal, each gradient is that of
        its own loss.  False: shared parameters, gradient of the batch-mean loss.
    """
    V, U = bases.gft.vectors, bases.gft.inverse_vectors
    W, Wi = bases.dft.vectors, bases.dft.inverse_vectors
    if grad and np.any(np.abs(bases.gft.values) < ZERO_TOL):
        raise NonDifferentiablePoint("GFT eigenvalue of modulus below 1e-14")
    Y = np.asarray(Y)
    M, N, T = Y.shape

    phi = graph_gains(bases, A, g_type)          # (.., N, T)
    g = time_gains(bases, b, d_type)             # (.., T)
    gs = g[:, None, :] if per_sample else g       # broadcast against (M, N, T)

    Pm = U @ Y
    Z = V @ (phi * Pm)
    Zt = Z @ Wi.T
    S = (Zt * gs) @ W.T
    S2 = H * S
    Q1 = S2 @ Wi.T
    Q = (Q1 / gs) @ W.T
    R = U @ Q
    X_hat = V @ (R / phi)

    out = _Pass(X_hat, np.zeros(M))
    if X is None:
        return out
    E = X_hat - np.asarray(X)
    out.losses = np.sum(np.abs(E) ** 2, axis=(1, 2)) / (N * T)
    if not grad:
        return out

    red = (lambda a: a) if per_sample else (lambda a: a.sum(axis=0))
    Xb = (2.0 / (N * T)) * E
    if not per_sample:
        Xb = Xb / M
    Rs_bar = V.conj().T @ Xb
    phi_bar = red(-np.conj(R) * Rs_bar / np.conj(phi) ** 2)
    R_bar = Rs_bar / np.conj(phi)
    Q_bar = U.conj().T @ R_bar
    Q2_bar = Q_bar @ W.conj()
    gs_bar = -np.conj(Q1) * Q2_bar / np.conj(gs) ** 2
    S2_bar = (Q2_bar / np.conj(gs)) @ Wi.conj()
    H_bar = red(np.conj(S) * S2_bar)
    S_bar = np.conj(H) * S2_bar
    S1_bar = S_bar @ W.conj()
    gs_bar = gs_bar + np.conj(Zt) * S1_bar
    Z_bar = (S1_bar * np.conj(gs)) @ Wi.conj()
    G_bar = V.conj().T @ Z_bar
    phi_bar = phi_bar + red(np.conj(Pm) * G_bar)
    g_bar = gs_bar.sum(axis=1) if per_sample else gs_bar.sum(axis=(0, 1))

    out.grad_A = _graph_factor_grad(bases, np.asarray(A, dtype=float), phi, phi_bar, g_type)
    out.grad_b = _time_factor_grad(bases, np.asarray(b, dtype=float), g, g_bar, d_type)
    out.grad_h = H_bar
    return out


def gradients(Y, X, model: FilterModel, bases: JointBases) -> GradState:
    """Exact gradient of ``mse_loss(reconstruct(Y), X)``.

    ``grad_h[k]`` packs the two real partials as ``dL/dRe h_k + i dL/dIm h_k``.
    For a tied (JFRFT) model ``grad_A`` and ``grad_b`` are filled with the
    derivative with respect to the single shared order.
    """
    Y = check_signal(Y, bases.n, bases.t)
    X = check_signal(X, bases.n, bases.t)
    p = model.params
    res = joint_pass(Y[None], X[None], p.graph_orders, p.time_orders, model.h_matrix,
                     bases, p.g_type, p.d_type)
    gA, gb = res.grad_A, res.grad_b
    if model.tied:
        gA = np.full_like(gA, gA.sum())
        gb = np.full_like(gb, gb.sum())
    return GradState(gA, gb, vec(res.grad_h), float(res.losses[0]))


def finite_difference_gradients(Y, X, model: FilterModel, bases: JointBases,
                                rel_step: float = 1e-6) -> GradState:
    """Central differences through :func:`reconstruct` (the operator path)."""
    p = model.params
    A0, b0, h0 = p.graph_orders, p.time_orders, model.h_diag

    def loss(A, b, h):
        m = FilterModel(OrderParams(A, b, p.g_type, p.d_type), h, model.step, model.tied)
        return mse_loss(reconstruct(Y, m, bases), X)

    def central(f, x):
        step = rel_step * max(1.0, abs(x))
        return (f(x + step) - f(x - step)) / (2 * step)

    if model.tied:
        alpha, beta = A0.flat[0], b0[0]
        ga = central(lambda v: loss(np.full_like(A0, v), b0, h0), alpha)
        gb = central(lambda v: loss(A0, np.full_like(b0, v), h0), beta)
        gA, gB = np.full_like(A0, ga), np.full_like(b0, gb)
    else:
        gA = np.zeros_like(A0)
        for idx in np.ndindex(*A0.shape):
            def f(v, idx=idx):
                A = A0.copy()
                A[idx] = v
                return loss(A, b0, h0)
            gA[idx] = central(f, A0[idx])
        gB = np.zeros_like(b0)
        for i in range(b0.shape[0]):
            def f(v, i=i):
                b = b0.copy()
                b[i] = v
                return loss(A0, b, h0)
            gB[i] = central(f, b0[i])

    gh = np.zeros(h0.shape, dtype=complex)
    for k in range(h0.shape[0]):
        def fr(v, k=k):
            h = h0.copy()
            h[k] = v + 1j * h0[k].imag
            return loss(A0, b0, h)

        def fi(v, k=k):
            h = h0.copy()
            h[k] = h0[k].real + 1j * v
            return loss(A0, b0, h)
        gh[k] = central(fr, h0[k].real) + 1j * central(fi, h0[k].imag)
    return GradState(gA, gB, gh, loss(A0, b0, h0))


# ---------------------------------------------------------------------------
# gradient-descent filtering


@dataclass
class GdResult:
    model: FilterModel
    loss_trace: np.ndarray = field(repr=False)


def _tie(grad, per_sample: bool):
    axes = tuple(range(1 if per_sample else 0, grad.ndim))
    total = grad.sum(axis=axes, keepdims=True)
    return np.broadcast_to(total, grad.shape)


def gd_filter_batch(Ys, Xs, config: OptimizerConfig, bases: JointBases) -> list[GdResult]:
    """Independent gradient-descent runs on a stack of signals, vectorized.

    Each signal gets its own (A, b, H); the updates follow
    ``theta <- theta - gamma dL/dtheta`` for ``config.epochs`` epochs.  The loss
    trace has ``epochs + 1`` entries: the initial loss and the loss after
    every update.
    """
    Ys = np.asarray(Ys)
    Xs = np.asarray(Xs)
    if Ys.ndim == 2:
        Ys, Xs = Ys[None], Xs[None]
    if Ys.shape != Xs.shape or Ys.shape[1:] != (bases.n, bases.t):
        raise ShapeMismatch(f"need matching (M, {bases.n}, {bases.t}) stacks, got {Ys.shape} and {Xs.shape}")
    M, N, T = Ys.shape
    g_type, d_type, tied = parse_transform(config.transform)
    A = np.full((M, N, T), float(config.init_order))
    b = np.full((M, T), float(config.init_order))
    H = np.full((M, N, T), complex(config.init_filter))
    gamma = config.gamma
    trace = np.empty((M, config.epochs + 1))

    for epoch in range(config.epochs + 1):
        last = epoch == config.epochs
        res = joint_pass(Ys, Xs, A, b, H, bases, g_type, d_type, per_sample=True, grad=not last)
        if not np.all(np.isfinite(res.losses)):
            raise DivergedLoss(f"loss became non-finite at epoch {epoch}")
        trace[:, epoch] = res.losses
        if last:
            break
        gA, gb = res.grad_A, res.grad_b
        if tied:
            gA, gb = _tie(gA, True), _tie(gb, True)
        A = A - gamma * gA
        b = b - gamma * gb
        H = H - gamma * res.grad_h
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b)) and np.all(np.isfinite(H))):
            raise DivergedLoss(f"parameters became non-finite at epoch {epoch}")

    results = []
    for m in range(M):
        params = OrderParams(A[m], b[m], g_type, d_type)
        model = FilterModel(params, vec(H[m]), config.epochs, tied)
        results.append(GdResult(model, trace[m].copy()))
    return results


def gd_filter(Y, X, config: OptimizerConfig, bases: JointBases) -> GdResult:
    """Gradient-descent filtering of one signal with the clean reference available."""
    Y = check_signal(Y, bases.n, bases.t)
    X = check_signal(X, bases.n, bases.t)
    return gd_filter_batch(Y[None], X[None], config, bases)[0]
