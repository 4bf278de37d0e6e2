import numpy as np
import pytest

from dmpjfrft.graph import Graph, build_gso
from dmpjfrft.spectral import JointBases


def path_graph(n: int) -> Graph:
    A = np.zeros((n, n))
    i = np.arange(n - 1)
    A[i, i + 1] = A[i + 1, i] = 1.0
    return Graph(A)


def cycle_graph(n: int) -> Graph:
    A = np.zeros((n, n))
    i = np.arange(n)
    A[i, (i + 1) % n] = A[(i + 1) % n, i] = 1.0
    return Graph(A)


def path_bases(n: int, t: int, kind: str = "adjacency") -> JointBases:
    return JointBases.from_gso(build_gso(path_graph(n), kind), t)


def rel_err(a, b) -> float:
    b_norm = np.linalg.norm(b)
    return float(np.linalg.norm(np.asarray(a) - np.asarray(b)) / (b_norm if b_norm > 0 else 1.0))


def crandn(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# acceptance bookkeeping: criterion -> list of (part, passed, detail)
ACCEPTANCE: dict = {}


def record_acceptance(criterion: int, part: str, passed: bool, detail: str) -> None:
    ACCEPTANCE.setdefault(criterion, []).append((part, passed, detail))
    print(f"criterion {criterion} [{part}]: {'PASS' if passed else 'FAIL'} ({detail})")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for c in sorted(ACCEPTANCE):
        parts = ACCEPTANCE[c]
        failed = [p for p, ok, _ in parts if not ok]
        status = "PASS" if not failed else "FAIL"
        detail = f"{len(parts) - len(failed)}/{len(parts)} parts pass"
        if failed:
            detail += "; failing: " + ", ".join(failed)
        terminalreporter.write_line(f"criterion {c:>2}: {status}  {detail}")
