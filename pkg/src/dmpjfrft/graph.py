"""Graphs, graph shift operators, k-NN graph construction and image patching."""

from __future__ import annotations

import enum
import hashlib
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist

from .errors import (
    DimensionMismatch,
    IsolatedVertex,
    NonDivisibleDimensions,
    ShapeMismatch,
    TooFewPoints,
)


class GsoKind(str, enum.Enum):
    ADJACENCY = "adjacency"
    LAPLACIAN = "laplacian"
    NORMALIZED_LAPLACIAN = "normalized_laplacian"
    ROW_NORMALIZED_ADJACENCY = "row_normalized_adjacency"
    SYMMETRIC_NORMALIZED_ADJACENCY = "symmetric_normalized_adjacency"

    @classmethod
    def parse(cls, value: "str | GsoKind") -> "GsoKind":
        if isinstance(value, cls):
            return value
        aliases = {
            "adj": cls.ADJACENCY,
            "lap": cls.LAPLACIAN,
            "nor_lap": cls.NORMALIZED_LAPLACIAN,
            "row_nor_adj": cls.ROW_NORMALIZED_ADJACENCY,
            "sym_nor_adj": cls.SYMMETRIC_NORMALIZED_ADJACENCY,
        }
        key = str(value).strip().lower().replace("-", "_").replace(" ", "_")
        if key in aliases:
            return aliases[key]
        return cls(key)


@dataclass(frozen=True, eq=False)
class Graph:
    """Dense weighted graph.

    The adjacency matrix is copied and frozen on construction.
    """

    adjacency: np.ndarray
    directed: bool = False
    n_vertices: int = field(init=False)

    def __post_init__(self):
        adj = np.array(self.adjacency, dtype=float)
        if adj.ndim != 2 or adj.shape[0] != adj.shape[1] or adj.shape[0] < 1:
            raise ShapeMismatch(f"adjacency must be square, got shape {adj.shape}")
        if not np.all(np.isfinite(adj)):
            raise ValueError("adjacency contains non-finite entries")
        if np.any(adj < 0):
            raise ValueError("adjacency weights must be nonnegative")
        if np.any(np.diag(adj) != 0):
            raise ValueError("adjacency must have a zero diagonal")
        if not self.directed and not np.array_equal(adj, adj.T):
            raise ValueError("undirected graph requires a symmetric adjacency")
        adj.setflags(write=False)
        object.__setattr__(self, "adjacency", adj)
        object.__setattr__(self, "n_vertices", adj.shape[0])

    @property
    def degrees(self) -> np.ndarray:
        # out-degree (row sums)
        return self.adjacency.sum(axis=1)

    def hash(self) -> str:
        """Stable content hash used to key caches and checkpoints."""
        h = hashlib.sha256()
        h.update(np.int64(self.n_vertices).tobytes())
        h.update(b"d" if self.directed else b"u")
        h.update(np.ascontiguousarray(self.adjacency, dtype="<f8").tobytes())
        return h.hexdigest()[:16]


def build_gso(graph: Graph, kind: "GsoKind | str") -> np.ndarray:
    """Return the graph shift operator of the requested kind.

    Normalized variants divide by the out-degree and raise
    :class:`IsolatedVertex` if any vertex has degree zero.
    """
    kind = GsoKind.parse(kind)
    A = graph.adjacency
    deg = graph.degrees
    n = graph.n_vertices

    if kind is GsoKind.ADJACENCY:
        return A.copy()
    if kind is GsoKind.LAPLACIAN:
        return np.diag(deg) - A

    if np.any(deg <= 0):
        bad = np.flatnonzero(deg <= 0).tolist()
        raise IsolatedVertex(f"{kind.value} undefined: vertices {bad} have zero degree")

    if kind is GsoKind.ROW_NORMALIZED_ADJACENCY:
        return A / deg[:, None]
    d_isqrt = 1.0 / np.sqrt(deg)
    sym = d_isqrt[:, None] * A * d_isqrt[None, :]
    if not graph.directed:
        # keep exact symmetry so downstream code can take the Hermitian path
        sym = 0.5 * (sym + sym.T)
    if kind is GsoKind.SYMMETRIC_NORMALIZED_ADJACENCY:
        return sym
    return np.eye(n) - sym


def knn_graph(points, k: int) -> Graph:
    """Undirected, unweighted k-nearest-neighbour graph (union symmetrization).

    Distances are Euclidean; ties are broken in favour of the lower vertex index.
    """
    pts = [np.atleast_1d(np.asarray(p, dtype=float)) for p in points]
    if k < 1:
        raise ValueError("k must be a positive integer")
    if len(pts) < k + 1:
        raise TooFewPoints(f"need at least k+1={k + 1} points, got {len(pts)}")
    dims = {p.shape for p in pts}
    if len(dims) != 1 or pts[0].ndim != 1:
        raise DimensionMismatch(f"all points must share one dimension, got {sorted(dims)}")
    X = np.vstack(pts)
    n = X.shape[0]

    dist = cdist(X, X)
    np.fill_diagonal(dist, np.inf)
    nearest = np.argsort(dist, axis=1, kind="stable")[:, :k]

    adj = np.zeros((n, n))
    rows = np.repeat(np.arange(n), k)
    adj[rows, nearest.ravel()] = 1.0
    adj = np.maximum(adj, adj.T)
    return Graph(adj)


def grid_coordinates(height: int, width: int | None = None) -> np.ndarray:
    """Row-major (row, col) pixel coordinates of a ``height x width`` grid."""
    width = height if width is None else width
    r, c = np.divmod(np.arange(height * width), width)
    return np.column_stack([r, c]).astype(float)


def patch_graph(patch: int, k: int = 4) -> Graph:
    """k-NN graph over the pixel coordinates of a ``patch x patch`` block.

    One graph is shared by every patch of a video.
    """
    return knn_graph(grid_coordinates(patch), k)


def check_signal(X, n: int | None = None, t: int | None = None) -> np.ndarray:
    """Validate a time-varying graph signal (vertices x time) and return it as an array."""
    X = np.asarray(X)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2:
        raise ShapeMismatch(f"signal must be 2-D (N x T), got shape {X.shape}")
    if n is not None and X.shape[0] != n:
        raise ShapeMismatch(f"signal has {X.shape[0]} vertices, expected {n}")
    if t is not None and X.shape[1] != t:
        raise ShapeMismatch(f"signal has {X.shape[1]} time steps, expected {t}")
    if not np.all(np.isfinite(X)):
        raise ValueError("signal contains non-finite entries")
    return X


def patchify(frames, patch: int) -> list[np.ndarray]:
    """Split grayscale frames into non-overlapping square patches.

    Parameters
    ----------
    frames : sequence of 2-D arrays, all ``H x W``
    patch : int
        Patch side length; must divide both ``H`` and ``W``.

    Returns
    -------
    list of ``(patch**2, n_frames)`` arrays, one per patch in row-major order
    over the patch grid. Column ``t`` is the row-major vectorization of the
    patch in frame ``t``.
    """
    stack = np.stack([np.asarray(f) for f in frames], axis=0)
    if stack.ndim != 3:
        raise ShapeMismatch("frames must be 2-D grayscale images of equal size")
    n_frames, H, W = stack.shape
    if patch < 1 or H % patch or W % patch:
        raise NonDivisibleDimensions(f"{H}x{W} frames are not divisible into {patch}x{patch} patches")
    gh, gw = H // patch, W // patch
    blocks = stack.reshape(n_frames, gh, patch, gw, patch).transpose(1, 3, 2, 4, 0)
    blocks = blocks.reshape(gh * gw, patch * patch, n_frames)
    return [b.copy() for b in blocks]


def unpatchify(signals, height: int, width: int, patch: int, n_frames: int) -> list[np.ndarray]:
    """Inverse of :func:`patchify`."""
    if patch < 1 or height % patch or width % patch:
        raise ShapeMismatch(f"{height}x{width} is not divisible into {patch}x{patch} patches")
    gh, gw = height // patch, width // patch
    if len(signals) != gh * gw:
        raise ShapeMismatch(f"expected {gh * gw} patch signals, got {len(signals)}")
    arr = np.stack([np.asarray(s) for s in signals], axis=0)
    if arr.shape[1:] != (patch * patch, n_frames):
        raise ShapeMismatch(
            f"patch signals must be {(patch * patch, n_frames)}, got {arr.shape[1:]}"
        )
    blocks = arr.reshape(gh, gw, patch, patch, n_frames).transpose(4, 0, 2, 1, 3)
    frames = blocks.reshape(n_frames, height, width)
    return [f.copy() for f in frames]


def segment_series(series, length: int) -> list[np.ndarray]:
    """Cut an ``N x L`` series into ``floor(L / length)`` consecutive segments.

    The trailing remainder is dropped.
    """
    series = check_signal(series)
    if length < 1:
        raise ValueError("segment length must be positive")
    count = series.shape[1] // length
    return [series[:, i * length:(i + 1) * length].copy() for i in range(count)]
