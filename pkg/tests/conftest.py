import numpy as np
import pytest

from hybridsim import HybridState, two_qubit_oscillator

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def reference_spec():
    return two_qubit_oscillator()


@pytest.fixture
def reference_state():
    return HybridState([1.0], [0.0], np.array([1, 1, 1, 1j]) / 2)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_unit(rng, d):
    w = rng.normal(size=d) + 1j * rng.normal(size=d)
    return w / np.linalg.norm(w)


def random_hermitian(rng, d):
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return (a + a.conj().T) / 2


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
