import numpy as np
import pytest

ACCEPTANCE_LINES: list[str] = []


def taylor_expm(A, t=1.0, terms=30):
    """Scaling-and-squaring Taylor exponential, independent of any eigensolver."""
    B = t * np.asarray(A, dtype=complex)
    norm = np.abs(B).sum(axis=1).max()
    s = max(0, int(np.ceil(np.log2(norm))) + 1) if norm > 0 else 0
    B = B / 2**s
    out = np.eye(B.shape[0], dtype=complex)
    term = np.eye(B.shape[0], dtype=complex)
    for k in range(1, terms + 1):
        term = term @ B / k
        out = out + term
    for _ in range(s):
        out = out @ out
    return out


def random_skew(n, rng):
    G = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return (G - G.conj().T) / 2


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
