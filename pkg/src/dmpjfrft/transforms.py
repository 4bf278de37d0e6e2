"""Graph, temporal and joint fractional Fourier transforms.

Conventions: a time-varying signal ``X`` is ``N x T`` (vertices x time);
``vec`` stacks columns.  Every transform here shares the eigenvectors of
its parent (GFT or DFT) matrix, so each one is represented internally by a
vector of spectral gains in that eigenbasis:

* MPGFRFT-I   gains ``lambda_k ** a_k``
* MPGFRFT-II  gains ``sum_n C_n lambda_k ** n`` with inverse-Vandermonde
  coefficients ``C_n = sum_j P[n, j] lambda_j ** a_n``
* MPDFRFT-I   gains ``exp(-i pi k b_k / 2)`` on the tagged DFT eigenbasis
* MPDFRFT-II  gains ``sum_t D_t exp(-2 pi i k t / T)``, i.e. the
  eigenvalues of ``sum_t D_t K^t`` with ``K = D_T^(4/T)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import ShapeMismatch, SingularBlock, ZeroEigenvalue
from .graph import check_signal
from .serialize import encode_complex
from .spectral import (
    ZERO_TOL,
    JointBases,
    SpectralBasis,
    fractional_matrix_power,
    inverse_vandermonde,
)

TYPES = ("I", "II")
TRANSFORMS = ("jfrft", "dmpjfrft_i_i", "dmpjfrft_i_ii", "dmpjfrft_ii_i", "dmpjfrft_ii_ii")
SINGULAR_CONDITION = 1e12


def parse_transform(name: str) -> tuple[str, str, bool]:
    """Map a transform name to ``(g_type, d_type, tied)``.

    ``jfrft`` is the type I-I transform with a single graph order and a
    single temporal order.
    """
    key = name.strip().lower().replace("-", "_")
    if key not in TRANSFORMS:
        raise ValueError(f"unknown transform {name!r}; expected one of {TRANSFORMS}")
    if key == "jfrft":
        return "I", "I", True
    _, g, d = key.split("_")
    return g.upper(), d.upper(), False


@dataclass(frozen=True, eq=False)
class OrderParams:
    """Per-time graph orders (``N x T``, column ``i`` drives time step ``i``) and temporal orders."""

    graph_orders: np.ndarray
    time_orders: np.ndarray
    g_type: str = "I"
    d_type: str = "I"

    def __post_init__(self):
        A = np.array(self.graph_orders, dtype=float)
        b = np.array(self.time_orders, dtype=float).ravel()
        if A.ndim != 2:
            raise ShapeMismatch(f"graph orders must be N x T, got shape {A.shape}")
        if b.shape[0] != A.shape[1]:
            raise ShapeMismatch(f"{A.shape[1]} time steps but {b.shape[0]} temporal orders")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
            raise ValueError("orders must be finite")
        g, d = str(self.g_type).upper(), str(self.d_type).upper()
        if g not in TYPES or d not in TYPES:
            raise ValueError(f"transform types must be 'I' or 'II', got {self.g_type!r}/{self.d_type!r}")
        A.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "graph_orders", A)
        object.__setattr__(self, "time_orders", b)
        object.__setattr__(self, "g_type", g)
        object.__setattr__(self, "d_type", d)

    @classmethod
    def constant(cls, n: int, t: int, alpha: float = 0.0, beta: float = 0.0,
                 g_type: str = "I", d_type: str = "I") -> "OrderParams":
        return cls(np.full((n, t), float(alpha)), np.full(t, float(beta)), g_type, d_type)

    @property
    def n(self) -> int:
        return self.graph_orders.shape[0]

    @property
    def t(self) -> int:
        return self.graph_orders.shape[1]

    def negated(self) -> "OrderParams":
        return OrderParams(-self.graph_orders, -self.time_orders, self.g_type, self.d_type)


# ---------------------------------------------------------------------------
# spectral gains


def _graph_log(gft: SpectralBasis) -> np.ndarray:
    if np.any(np.abs(gft.values) < ZERO_TOL):
        raise ZeroEigenvalue("GFT matrix has a zero eigenvalue")
    return gft.log_values()


def mpgfrft_ii_coefficients(gft: SpectralBasis, orders, p_matrix=None) -> np.ndarray:
    """Inverse-Vandermonde coefficients ``C_n = sum_j P[n, j] lambda_j ** a_n``.

    ``orders`` has the power index ``n`` on axis ``-2`` when 2-D or more
    (one column per time step) and is a plain vector otherwise.
    """
    P = inverse_vandermonde(gft.values).p_matrix if p_matrix is None else p_matrix
    loglam = _graph_log(gft)
    a = np.asarray(orders, dtype=float)
    if a.ndim == 1:
        return np.einsum("nj,nj->n", P, np.exp(a[:, None] * loglam[None, :]))
    E = np.exp(a[..., None] * loglam)  # (..., N, T, N_j)
    return np.einsum("nj,...ntj->...nt", P, E)


def graph_gains(bases: JointBases, graph_orders, g_type: str = "I") -> np.ndarray:
    """Spectral gains of the per-column graph transforms, shape ``(..., N, T)``."""
    A = np.asarray(graph_orders, dtype=float)
    loglam = _graph_log(bases.gft)
    if g_type == "I":
        return np.exp(A * loglam[:, None])
    C = mpgfrft_ii_coefficients(bases.gft, A, bases.vandermonde.p_matrix)
    powers = np.vander(bases.gft.values, bases.n, increasing=True)
    return np.einsum("kn,...nt->...kt", powers, C)


def mpdfrft_ii_coeff(t: int, a_t: float, T: int) -> complex:
    """Closed-form MPDFRFT-II coefficient with its removable singularities resolved."""
    if T < 1:
        raise ValueError("T must be >= 1")
    x = t - 0.25 * T * a_t
    nearest = round(x)
    if abs(x - nearest) <= 1e-12:
        return 1.0 + 0j if nearest % T == 0 else 0j
    num = 1.0 - np.exp(2j * np.pi * x)
    den = 1.0 - np.exp(2j * np.pi * x / T)
    return complex(num / den / T)


def _mpdfrft_ii_coeffs(b) -> np.ndarray:
    b = np.asarray(b, dtype=float)
    T = b.shape[-1]
    flat = b.reshape(-1, T)
    out = np.array([[mpdfrft_ii_coeff(t, row[t], T) for t in range(T)] for row in flat])
    return out.reshape(b.shape)


def _k_power_phases(dft: SpectralBasis) -> np.ndarray:
    """``E[k, t]``: eigenvalue of ``K^t`` on DFT eigenvector ``k``."""
    T = dft.size
    t = np.arange(T)
    return np.exp(-2j * np.pi * (np.outer(dft.tags, t) % T) / T)


def time_gains(bases: JointBases, time_orders, d_type: str = "I") -> np.ndarray:
    """Spectral gains of the temporal transform on the DFT eigenbasis, shape ``(..., T)``."""
    b = np.asarray(time_orders, dtype=float)
    if d_type == "I":
        return np.exp(b * bases.dft.log_values())
    return np.einsum("kt,...t->...k", _k_power_phases(bases.dft), _mpdfrft_ii_coeffs(b))


def _from_gains(basis: SpectralBasis, gains) -> np.ndarray:
    return (basis.vectors * gains) @ basis.inverse_vectors


# ---------------------------------------------------------------------------
# single-axis transform matrices


def gfrft_matrix(gft: SpectralBasis, alpha: float) -> np.ndarray:
    """Graph fractional Fourier transform matrix ``F_G ** alpha``."""
    return fractional_matrix_power(gft, alpha)


def mpgfrft_i_matrix(gft: SpectralBasis, a) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.shape != gft.values.shape:
        raise ShapeMismatch(f"need {gft.size} orders, got shape {a.shape}")
    return fractional_matrix_power(gft, a)


def mpgfrft_ii_matrix(gft: SpectralBasis, a, p_matrix=None) -> np.ndarray:
    """Type-II multiple-parameter GFRFT ``sum_n C_n F_G ** n``.

    Raises :class:`IllConditioned` when the GFT eigenvalues are not
    well separated.
    """
    a = np.asarray(a, dtype=float)
    if a.shape != gft.values.shape:
        raise ShapeMismatch(f"need {gft.size} orders, got shape {a.shape}")
    C = mpgfrft_ii_coefficients(gft, a, p_matrix)
    gains = np.vander(gft.values, gft.size, increasing=True) @ C
    return _from_gains(gft, gains)


def mpdfrft_i_matrix(dft: SpectralBasis, b) -> np.ndarray:
    b = np.broadcast_to(np.asarray(b, dtype=float), dft.values.shape)
    return _from_gains(dft, np.exp(b * dft.log_values()))


def mpdfrft_ii_matrix(b, dft: SpectralBasis | None = None) -> np.ndarray:
    """Type-II MPDFRFT ``sum_t D_t K^t`` with ``K = D_T ** (4/T)``."""
    from .spectral import dft_eigenbasis

    b = np.asarray(b, dtype=float).ravel()
    dft = dft_eigenbasis(b.shape[0]) if dft is None else dft
    if dft.size != b.shape[0]:
        raise ShapeMismatch(f"need {dft.size} orders, got {b.shape[0]}")
    gains = _k_power_phases(dft) @ _mpdfrft_ii_coeffs(b)
    return _from_gains(dft, gains)


def dfrft_matrix(dft: SpectralBasis, beta: float) -> np.ndarray:
    """Single-order discrete fractional Fourier transform ``D_T ** beta``."""
    return mpdfrft_i_matrix(dft, beta)


def jfrft_apply(X, gft: SpectralBasis, dft: SpectralBasis, alpha: float, beta: float) -> np.ndarray:
    """``F_G**alpha X (D_T**beta)^T`` (plain transpose)."""
    X = check_signal(X, gft.size, dft.size)
    return gfrft_matrix(gft, alpha) @ X @ dfrft_matrix(dft, beta).T


# ---------------------------------------------------------------------------
# joint transform


def graph_blocks(params: OrderParams, bases: JointBases) -> np.ndarray:
    """Per-time graph transform matrices, shape ``(T, N, N)``."""
    gains = graph_gains(bases, params.graph_orders, params.g_type)  # (N, T)
    V, U = bases.gft.vectors, bases.gft.inverse_vectors
    return np.einsum("ik,kt,kj->tij", V, gains, U)


def time_factor(params: OrderParams, bases: JointBases) -> np.ndarray:
    gains = time_gains(bases, params.time_orders, params.d_type)
    return _from_gains(bases.dft, gains)


def _check_dims(params: OrderParams, bases: JointBases):
    if (params.n, params.t) != (bases.n, bases.t):
        raise ShapeMismatch(
            f"orders are {params.n}x{params.t} but bases are {bases.n}x{bases.t}"
        )


def dmpjfrft_apply(X, params: OrderParams, bases: JointBases) -> np.ndarray:
    """Column ``i`` through its own graph transform, then ``(.) (D^b)^T``."""
    _check_dims(params, bases)
    X = check_signal(X, bases.n, bases.t)
    blocks = graph_blocks(params, bases)
    Z = np.einsum("tij,jt->it", blocks, X)
    return Z @ time_factor(params, bases).T


@dataclass(frozen=True, eq=False)
class JointOperator:
    """Factored joint operator.

    Forward form: ``(D kron I_N) blkdiag(F_1..F_T)``.  With ``inverse=True``
    the factors act in the opposite order, ``blkdiag(F_1..F_T) (D kron I_N)``,
    which is the shape of an inverted forward operator.
    """

    graph_blocks: np.ndarray
    time_factor: np.ndarray
    inverse: bool = False

    @property
    def n(self) -> int:
        return self.graph_blocks.shape[1]

    @property
    def t(self) -> int:
        return self.graph_blocks.shape[0]

    @property
    def blk_graph(self) -> np.ndarray:
        return scipy.linalg.block_diag(*self.graph_blocks)

    def materialize(self) -> np.ndarray:
        kron = np.kron(self.time_factor, np.eye(self.n))
        blk = self.blk_graph
        return blk @ kron if self.inverse else kron @ blk

    def apply_matrix(self, X) -> np.ndarray:
        """Apply to an ``N x T`` signal (or a stack ``(..., N, T)``); returns the same shape."""
        X = np.asarray(X)
        if X.shape[-2:] != (self.n, self.t):
            raise ShapeMismatch(f"operator expects (..., {self.n}, {self.t}), got {X.shape}")
        if self.inverse:
            Z = X @ self.time_factor.T
            return np.einsum("tij,...jt->...it", self.graph_blocks, Z)
        Z = np.einsum("tij,...jt->...it", self.graph_blocks, X)
        return Z @ self.time_factor.T

    def apply(self, x) -> np.ndarray:
        """Apply to a column-stacked vector of length ``N*T``."""
        x = np.asarray(x)
        if x.shape != (self.n * self.t,):
            raise ShapeMismatch(f"expected a vector of length {self.n * self.t}, got {x.shape}")
        X = x.reshape(self.n, self.t, order="F")
        return self.apply_matrix(X).reshape(-1, order="F")

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "t": self.t,
            "inverse": self.inverse,
            "graph_blocks": encode_complex(self.graph_blocks),
            "time_factor": encode_complex(self.time_factor),
        }


def dmpjfrft_operator(params: OrderParams, bases: JointBases) -> JointOperator:
    _check_dims(params, bases)
    return JointOperator(graph_blocks(params, bases), time_factor(params, bases))


def _safe_inverse(M: np.ndarray, what: str) -> np.ndarray:
    cond = np.linalg.cond(M)
    if not np.isfinite(cond) or cond > SINGULAR_CONDITION:
        raise SingularBlock(f"{what} is singular (condition {cond:.3g})")
    return np.linalg.inv(M)


def dmpjfrft_inverse(op: JointOperator) -> JointOperator:
    """Inverse operator from the inverted blocks and time factor, in reversed order."""
    blocks = np.stack([_safe_inverse(B, f"graph block {i}") for i, B in enumerate(op.graph_blocks)])
    return JointOperator(blocks, _safe_inverse(op.time_factor, "time factor"), not op.inverse)
