"""Eigendecompositions and fractional matrix powers.

Everything here works on dense matrices.  A :class:`SpectralBasis` holds a
full diagonalization ``M = V diag(values) V^-1``; fractional powers take
eigenvalue powers on the principal branch of the logarithm, except for the
DFT basis, whose eigenvalues carry integer tags ``k`` with
``mu_k = exp(-i pi k / 2)`` and are powered exactly on those phases.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import Defective, IllConditioned, ZeroEigenvalue
from .serialize import decode_complex, encode_complex

ZERO_TOL = 1e-14
DEFECTIVE_RESIDUAL = 1e-6
MAX_CONDITION = 1e12
_REAL_SNAP = 1e-13
_DFT_PHASES = np.array([1.0, -1.0j, -1.0, 1.0j])


@dataclass(frozen=True, eq=False)
class SpectralBasis:
    """Full eigendecomposition of a square matrix.

    ``tags`` is only set for the DFT eigenbasis: integer Hermite orders whose
    phases ``exp(-i pi k / 2)`` define the eigenvalues exactly.
    """

    vectors: np.ndarray
    values: np.ndarray
    inverse_vectors: np.ndarray
    condition: float
    tags: np.ndarray | None = None

    @property
    def size(self) -> int:
        return self.values.shape[0]

    @property
    def matrix(self) -> np.ndarray:
        return (self.vectors * self.values) @ self.inverse_vectors

    def log_values(self) -> np.ndarray:
        """Logarithms of the eigenvalues used for every fractional power."""
        if self.tags is not None:
            return -0.5j * np.pi * self.tags.astype(float)
        return principal_log(self.values)

    def powers(self, orders) -> np.ndarray:
        """Eigenvalue powers ``lambda_k ** orders_k`` (broadcasting over leading axes)."""
        orders = np.asarray(orders, dtype=float)
        if self.tags is not None:
            return np.exp(orders * self.log_values())
        return _principal_powers(self.values, orders)

    def to_dict(self) -> dict:
        out = {
            "vectors": encode_complex(self.vectors),
            "values": encode_complex(self.values),
            "inverse_vectors": encode_complex(self.inverse_vectors),
            "condition": float(self.condition),
        }
        if self.tags is not None:
            out["tags"] = self.tags.tolist()
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "SpectralBasis":
        tags = d.get("tags")
        return cls(
            vectors=decode_complex(d["vectors"]),
            values=decode_complex(d["values"]),
            inverse_vectors=decode_complex(d["inverse_vectors"]),
            condition=float(d["condition"]),
            tags=None if tags is None else np.asarray(tags, dtype=int),
        )


@dataclass(frozen=True, eq=False)
class VandermondeCoeffs:
    p_matrix: np.ndarray
    source_values: np.ndarray


def principal_log(values) -> np.ndarray:
    """Principal logarithm with Arg in (-pi, pi]; a signed-zero imaginary part counts as +0."""
    v = np.asarray(values, dtype=complex)
    v = v.real + 1j * (v.imag + 0.0)
    return np.log(np.abs(v)) + 1j * np.angle(v)


def principal_power(value: complex, order: float) -> complex:
    """``value ** order`` on the principal branch.

    A (numerically) zero base raises :class:`ZeroEigenvalue` for negative
    orders and gives 0 (order > 0) or 1 (order == 0) otherwise.
    """
    value = complex(value)
    if abs(value) < ZERO_TOL:
        if order < 0:
            raise ZeroEigenvalue(f"cannot raise {value} to negative order {order}")
        return 0j if order > 0 else 1 + 0j
    return complex(np.exp(order * principal_log(value)))


def _principal_powers(values: np.ndarray, orders: np.ndarray) -> np.ndarray:
    values = np.asarray(values, dtype=complex)
    orders = np.asarray(orders, dtype=float)
    small = np.abs(values) < ZERO_TOL
    if not small.any():
        return np.exp(orders * principal_log(values))
    o = np.broadcast_to(orders, np.broadcast_shapes(orders.shape, values.shape))
    zero_mask = np.broadcast_to(small, o.shape)
    if np.any(o[zero_mask] < 0):
        raise ZeroEigenvalue("zero eigenvalue raised to a negative order")
    safe = np.where(small, 1.0, values)
    out = np.exp(o * principal_log(safe))
    return np.where(zero_mask, np.where(o > 0, 0.0, 1.0), out)


def _sort_and_normalize(values, vectors, inverse):
    order = np.lexsort((-values.imag, -values.real))
    values = values[order]
    vectors = vectors[:, order]
    inverse = inverse[order, :]
    # fix the free per-column scale: the largest-modulus entry becomes real positive
    idx = np.argmax(np.abs(vectors), axis=0)
    pivot = vectors[idx, np.arange(vectors.shape[1])]
    phase = pivot / np.abs(pivot)
    if np.isrealobj(vectors):
        phase = np.sign(phase)
    vectors = vectors / phase[None, :]
    inverse = inverse * phase[:, None]
    return values, vectors, inverse


def diagonalize(matrix) -> SpectralBasis:
    """Full eigendecomposition ``matrix = V diag(values) V^-1``.

    Hermitian input (exact equality with its conjugate transpose) and normal
    input get an orthonormal eigenbasis.  Eigenvalues are sorted by
    descending real part, then descending imaginary part.  Non-diagonalizable
    input raises :class:`Defective`.
    """
    M = np.asarray(matrix)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"matrix must be square, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix contains non-finite entries")
    n = M.shape[0]
    norm = np.linalg.norm(M)

    if np.array_equal(M, M.conj().T):
        w, V = np.linalg.eigh(M)
        values = w.astype(complex)
        inverse = V.conj().T
    else:
        Mc = M.astype(complex)
        commutator = Mc @ Mc.conj().T - Mc.conj().T @ Mc
        upper = None
        if np.linalg.norm(commutator) <= 1e-12 * max(norm, 1.0) ** 2:
            upper, V = scipy.linalg.schur(Mc, output="complex")
            if np.linalg.norm(np.triu(upper, 1)) > 1e-10 * max(norm, 1.0):
                upper = None
        if upper is not None:
            values = np.diag(upper).copy()
            inverse = V.conj().T
        else:
            values, V = np.linalg.eig(Mc)
            try:
                inverse = np.linalg.solve(V, np.eye(n))
            except np.linalg.LinAlgError as exc:
                raise Defective("eigenvector matrix is singular (Jordan block)") from exc

    snap = np.abs(values.imag) <= _REAL_SNAP * np.maximum(1.0, np.abs(values))
    values = np.where(snap, values.real + 0j, values)
    values, V, inverse = _sort_and_normalize(values, V, inverse)

    condition = float(np.linalg.cond(V))
    if not np.isfinite(condition) or condition > MAX_CONDITION:
        raise Defective(f"eigenvector condition number {condition:.3g} exceeds {MAX_CONDITION:.0e}")
    residual = np.linalg.norm((V * values) @ inverse - M)
    if residual > DEFECTIVE_RESIDUAL * max(norm, np.finfo(float).tiny):
        raise Defective(f"reconstruction residual {residual:.3g} too large; not diagonalizable")
    return SpectralBasis(V, values, inverse, condition)


def fractional_matrix_power(basis: SpectralBasis, orders) -> np.ndarray:
    """``V diag(lambda_k ** a_k) V^-1`` with principal-branch eigenvalue powers.

    ``orders`` is a scalar or a vector with one order per eigenvalue.
    """
    orders = np.broadcast_to(np.asarray(orders, dtype=float), basis.values.shape)
    return (basis.vectors * _principal_powers(basis.values, orders)) @ basis.inverse_vectors


def dft_matrix(T: int) -> np.ndarray:
    """Unitary DFT matrix, entry ``(m, n) = exp(-2 pi i m n / T) / sqrt(T)``."""
    if T < 1:
        raise ValueError("T must be >= 1")
    m = np.arange(T)
    return np.exp(-2j * np.pi * (np.outer(m, m) % T) / T) / np.sqrt(T)


def _parity_bases(T: int) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal bases of the even / odd subspaces under ``n -> -n mod T``."""
    even, odd = [], []
    s = 1.0 / np.sqrt(2.0)
    for n in range(T):
        m = (-n) % T
        if m == n:
            v = np.zeros(T)
            v[n] = 1.0
            even.append(v)
        elif n < m:
            v = np.zeros(T)
            v[n] = v[m] = s
            even.append(v)
            w = np.zeros(T)
            w[n], w[m] = s, -s
            odd.append(w)
    E = np.array(even).T
    O = np.array(odd).T if odd else np.zeros((T, 0))
    return E, O


def _commuting_matrix(T: int) -> np.ndarray:
    S = np.diag(2.0 * np.cos(2.0 * np.pi * np.arange(T) / T) - 4.0)
    for n in range(T):
        S[n, (n + 1) % T] += 1.0
        S[(n + 1) % T, n] += 1.0
    return S


def dft_eigenbasis(T: int) -> SpectralBasis:
    """Real orthonormal Hermite-like eigenbasis of the unitary DFT.

    Eigenvectors come from the symmetric tridiagonal-plus-corners matrix that
    commutes with the DFT, diagonalized separately on its even and odd
    subspaces.  Vector ``j`` is tagged with Hermite order ``k_j``
    (``0..T-2`` then ``T-1`` for odd ``T`` or ``T`` for even ``T``) and has
    eigenvalue ``exp(-i pi k_j / 2)``.
    """
    if T < 1:
        raise ValueError("T must be >= 1")
    S = _commuting_matrix(T)
    E, O = _parity_bases(T)
    we, ve = np.linalg.eigh(E.T @ S @ E)
    even = E @ ve[:, np.argsort(-we, kind="stable")]
    if O.shape[1]:
        wo, vo = np.linalg.eigh(O.T @ S @ O)
        odd = O @ vo[:, np.argsort(-wo, kind="stable")]
    else:
        odd = O

    tags = np.array(list(range(T - 1)) + [T - 1 if T % 2 else T], dtype=int)
    cols, ie, io = [], 0, 0
    for k in tags:
        if k % 2 == 0:
            cols.append(even[:, ie])
            ie += 1
        else:
            cols.append(odd[:, io])
            io += 1
    V = np.column_stack(cols)
    idx = np.argmax(np.abs(V), axis=0)
    V = V * np.sign(V[idx, np.arange(T)])[None, :]
    values = _DFT_PHASES[tags % 4]
    return SpectralBasis(V, values, V.T.copy(), float(np.linalg.cond(V)), tags=tags)


def inverse_vandermonde(values) -> VandermondeCoeffs:
    """Inverse of ``W[j, n] = values[j] ** n`` by a linear solve.

    Raises :class:`IllConditioned` for (near-)coincident nodes or when the
    residual ``||P W - I||_F`` exceeds 1e-6.
    """
    values = np.asarray(values, dtype=complex).ravel()
    M = values.shape[0]
    if M > 1:
        gaps = np.abs(values[:, None] - values[None, :]) + np.diag(np.full(M, np.inf))
        if gaps.min() <= 1e-10:
            raise IllConditioned(f"Vandermonde nodes coincide (min gap {gaps.min():.3g})")
    W = np.vander(values, M, increasing=True)
    try:
        P = np.linalg.solve(W, np.eye(M))
    except np.linalg.LinAlgError as exc:
        raise IllConditioned("Vandermonde matrix is singular") from exc
    residual = np.linalg.norm(P @ W - np.eye(M))
    if not np.isfinite(residual) or residual > 1e-6:
        raise IllConditioned(f"inverse Vandermonde residual {residual:.3g} exceeds 1e-6")
    return VandermondeCoeffs(P, values)


def gft_matrix(gso) -> np.ndarray:
    """GFT matrix ``F_G = U_Z^-1`` from the eigendecomposition of the shift operator."""
    return diagonalize(gso).inverse_vectors


def gft_basis(gso) -> SpectralBasis:
    """Eigendecomposition of the GFT matrix itself, the basis of every graph fractional power."""
    return diagonalize(gft_matrix(gso))


@dataclass(frozen=True, eq=False)
class JointBases:
    """GFT and DFT eigenbases for ``N``-vertex, ``T``-step signals.

    The inverse Vandermonde matrix needed by type-II graph transforms is
    computed on first use under a lock.
    """

    gft: SpectralBasis
    dft: SpectralBasis
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)
    _cache: dict = field(default_factory=dict, repr=False)

    @classmethod
    def from_gso(cls, gso, n_steps: int) -> "JointBases":
        return cls(gft_basis(gso), dft_eigenbasis(n_steps))

    @property
    def n(self) -> int:
        return self.gft.size

    @property
    def t(self) -> int:
        return self.dft.size

    @property
    def vandermonde(self) -> VandermondeCoeffs:
        with self._lock:
            if "vandermonde" not in self._cache:
                self._cache["vandermonde"] = inverse_vandermonde(self.gft.values)
            return self._cache["vandermonde"]

    def to_dict(self) -> dict:
        return {"gft": self.gft.to_dict(), "dft": self.dft.to_dict()}

    @classmethod
    def from_dict(cls, d: dict) -> "JointBases":
        return cls(SpectralBasis.from_dict(d["gft"]), SpectralBasis.from_dict(d["dft"]))
