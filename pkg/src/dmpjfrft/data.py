"""Synthetic generators, file formats (CSV, PGM, JSON) and the decomposition cache."""

from __future__ import annotations

import json
import os
import threading
from pathlib import Path

import numpy as np

from .errors import ShapeMismatch
from .graph import Graph, GsoKind, build_gso, check_signal, knn_graph
from .spectral import JointBases, dft_matrix, gft_matrix

SYNTHETIC_KINDS = ("smooth_graph", "bandlimited_joint", "random")


def random_geometric_graph(n: int, rng: np.random.Generator, k: int = 4) -> Graph:
    """k-NN graph on ``n`` uniform random points in the unit square."""
    k = min(k, n - 1)
    return knn_graph(rng.uniform(size=(n, 2)), k)


def gen_synthetic(n: int, t: int, kind: str = "smooth_graph", seed: int = 0, *,
                  support: int | None = None, n_modes: int = 3, amplitude: float = 3.0,
                  k: int = 4) -> tuple[np.ndarray, Graph]:
    """Seeded synthetic time-varying signal on a random 2-D k-NN graph.

    Parameters
    ----------
    n, t : int
        Vertices and time steps.
    kind : {"smooth_graph", "bandlimited_joint", "random"}
        ``smooth_graph``: the ``n_modes`` lowest Laplacian eigenvectors with
        slowly oscillating weights; ``bandlimited_joint``: exactly ``support``
        nonzero coefficients in the joint GFT x DFT domain of the Laplacian;
        ``random``: i.i.d. standard Gaussian entries.
    amplitude : float
        RMS amplitude of ``smooth_graph`` signals.

    Returns
    -------
    X : ndarray, shape (n, t)
    graph : Graph
    """
    if n < 2 or t < 1:
        raise ValueError("need n >= 2 and t >= 1")
    if kind not in SYNTHETIC_KINDS:
        raise ValueError(f"unknown synthetic kind {kind!r}; expected one of {SYNTHETIC_KINDS}")
    rng = np.random.default_rng(seed)
    graph = random_geometric_graph(n, rng, k)

    if kind == "random":
        return rng.standard_normal((n, t)), graph

    if kind == "smooth_graph":
        L = build_gso(graph, GsoKind.LAPLACIAN)
        _, U = np.linalg.eigh(L)
        m = min(n_modes, n)
        time = np.arange(t)
        freq = rng.uniform(0.0, 1.0, m) / max(t, 1)
        phase = rng.uniform(0.0, 2 * np.pi, m)
        weight = rng.standard_normal(m) / (1.0 + np.arange(m))
        coeff = 1.0 + weight[:, None] * np.cos(2 * np.pi * freq[:, None] * time + phase[:, None])
        coeff *= rng.choice([-1.0, 1.0], m)[:, None]
        X = U[:, :m] @ coeff
        return amplitude * X / np.sqrt(np.mean(X ** 2)), graph

    support = max(1, n * t // 8) if support is None else support
    if not 1 <= support <= n * t:
        raise ValueError(f"support must be in [1, {n * t}]")
    F = gft_matrix(build_gso(graph, GsoKind.LAPLACIAN))
    D = dft_matrix(t)
    S = np.zeros(n * t, dtype=complex)
    idx = rng.choice(n * t, size=support, replace=False)
    S[idx] = rng.standard_normal(support) + 1j * rng.standard_normal(support)
    S = S.reshape(n, t, order="F")
    X = np.linalg.solve(F, S) @ np.linalg.inv(D.T)
    return X, graph


def joint_spectrum(X, graph: Graph, kind: GsoKind | str = GsoKind.LAPLACIAN) -> np.ndarray:
    """``F_G X D_T^T``, the joint time-vertex Fourier coefficients."""
    X = check_signal(X, graph.n_vertices)
    return gft_matrix(build_gso(graph, kind)) @ X @ dft_matrix(X.shape[1]).T


# ---------------------------------------------------------------------------
# CSV


def format_complex(z: complex) -> str:
    z = complex(z)
    if z.imag == 0 and not np.signbit(z.imag):
        return repr(z.real)
    sign = "+" if z.imag >= 0 and not np.signbit(z.imag) else "-"
    return f"{z.real!r}{sign}{abs(z.imag)!r}i"


def parse_complex(text: str) -> complex:
    s = text.strip().replace(" ", "")
    if not s:
        raise ValueError("empty CSV field")
    return complex(s.replace("i", "j")) if s.endswith("i") else complex(float(s))


def write_signal_csv(path, X) -> None:
    """N rows, T comma-separated columns; complex entries as ``a+bi``."""
    X = np.asarray(X)
    lines = [",".join(format_complex(v) for v in row) for row in np.atleast_2d(X)]
    Path(path).write_text("\n".join(lines) + "\n")


def read_signal_csv(path) -> np.ndarray:
    rows = [ln for ln in Path(path).read_text().splitlines() if ln.strip()]
    data = [[parse_complex(f) for f in ln.split(",")] for ln in rows]
    widths = {len(r) for r in data}
    if len(widths) != 1:
        raise ShapeMismatch(f"ragged CSV in {path}: row widths {sorted(widths)}")
    X = np.array(data, dtype=complex)
    return X.real.copy() if np.all(X.imag == 0) else X


def write_graph_csv(path, graph: Graph) -> None:
    lines = [",".join(repr(float(v)) for v in row) for row in graph.adjacency]
    Path(path).write_text("\n".join(lines) + "\n")


def read_graph_csv(path, directed: bool = False) -> Graph:
    A = np.loadtxt(path, delimiter=",", ndmin=2)
    return Graph(A, directed=directed)


# ---------------------------------------------------------------------------
# PGM (8-bit grayscale)


def _pgm_tokens(data: bytes):
    """Yield header tokens and the byte offset after each, skipping ``#`` comments."""
    pos, n = 0, len(data)
    while pos < n:
        c = data[pos:pos + 1]
        if c == b"#":
            while pos < n and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
        elif c.isspace():
            pos += 1
        else:
            start = pos
            while pos < n and not data[pos:pos + 1].isspace() and data[pos:pos + 1] != b"#":
                pos += 1
            yield data[start:pos], pos


def read_pgm(path) -> np.ndarray:
    """Read a binary (P5) or ASCII (P2) 8-bit PGM image as a float array."""
    data = Path(path).read_bytes()
    tokens = _pgm_tokens(data)
    magic, _ = next(tokens)
    if magic not in (b"P5", b"P2"):
        raise ValueError(f"{path}: not a P5/P2 PGM file")
    width, _ = next(tokens)
    height, _ = next(tokens)
    maxval, end = next(tokens)
    w, h, mv = int(width), int(height), int(maxval)
    if not 0 < mv < 256:
        raise ValueError(f"{path}: only 8-bit PGM is supported (maxval {mv})")
    if magic == b"P5":
        raw = data[end + 1:end + 1 + w * h]
        if len(raw) != w * h:
            raise ValueError(f"{path}: truncated pixel data")
        img = np.frombuffer(raw, dtype=np.uint8)
    else:
        img = np.array([int(tok) for tok, _ in tokens][: w * h], dtype=np.uint8)
        if img.size != w * h:
            raise ValueError(f"{path}: truncated pixel data")
    return img.reshape(h, w).astype(float)


def to_uint8(img) -> np.ndarray:
    """Round real parts and clamp to ``[0, 255]``."""
    return np.clip(np.rint(np.real(img)), 0, 255).astype(np.uint8)


def write_pgm(path, img, binary: bool = True) -> None:
    px = to_uint8(img)
    h, w = px.shape
    if binary:
        Path(path).write_bytes(f"P5\n{w} {h}\n255\n".encode() + px.tobytes())
    else:
        body = "\n".join(" ".join(str(v) for v in row) for row in px)
        Path(path).write_text(f"P2\n{w} {h}\n255\n{body}\n")


def read_pgm_sequence(directory) -> list[np.ndarray]:
    """All ``*.pgm`` files of a directory in lexicographic filename order."""
    files = sorted(Path(directory).glob("*.pgm"))
    if not files:
        raise FileNotFoundError(f"no .pgm files in {directory}")
    return [read_pgm(f) for f in files]


# ---------------------------------------------------------------------------
# decomposition cache


class DecompositionCache:
    """JSON file cache of :class:`JointBases` keyed by (GSO kind, graph hash, T).

    Lookups and inserts are serialized by a lock; files are written
    atomically via a temporary file and rename.
    """

    def __init__(self, directory):
        self.directory = Path(directory)
        self._lock = threading.Lock()

    def _path(self, kind: GsoKind, graph: Graph, t: int) -> Path:
        return self.directory / f"{kind.value}_{graph.hash()}_T{t}.json"

    def get(self, graph: Graph, kind: GsoKind | str, t: int) -> JointBases:
        kind = GsoKind.parse(kind)
        path = self._path(kind, graph, t)
        with self._lock:
            if path.exists():
                return JointBases.from_dict(json.loads(path.read_text()))
            bases = JointBases.from_gso(build_gso(graph, kind), t)
            self.directory.mkdir(parents=True, exist_ok=True)
            tmp = path.with_suffix(".tmp")
            tmp.write_text(json.dumps(bases.to_dict()))
            os.replace(tmp, path)
            return bases
