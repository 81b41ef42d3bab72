import numpy as np
import pytest

from interdep.dgp import StructuralParams, make_characteristics
from interdep.netgen import InteractionMatrix, NetworkParams, build_weights


def random_weights(rng, n, density=0.3, normalize=False):
    w = rng.random((n, n)) * (rng.random((n, n)) < density)
    np.fill_diagonal(w, 0.0)
    if normalize:
        s = w.sum(axis=1, keepdims=True)
        w = np.divide(w, s, out=np.zeros_like(w), where=s > 0)
    return w


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def exchange():
    """Two units pointing at each other."""
    return InteractionMatrix.from_array([[0.0, 1.0], [1.0, 0.0]])


@pytest.fixture(scope="session")
def default_world():
    chars = make_characteristics(200, seed=np.random.SeedSequence(42, spawn_key=(0,)))
    return chars, build_weights(chars, NetworkParams())


@pytest.fixture
def params():
    return StructuralParams(beta=1.0, rho=0.4, gamma=(0.5,), sigma=1.0)


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def verdict():
    """Record one PASS/FAIL line for an acceptance criterion and return the flag."""

    def record(label, ok, detail=""):
        line = f"{'PASS' if ok else 'FAIL'}  {label}  {detail}".rstrip()
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
