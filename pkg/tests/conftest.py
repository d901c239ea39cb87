from functools import lru_cache

import pytest

from spinflip import quantum as qd

ACCEPTANCE_LINES: list[str] = []


@lru_cache(maxsize=None)
def spectrum_for(j, k1, k2, eps):
    """Diagonalization shared across tests; spectra are immutable."""
    p = qd.SpinParams(j, k1, k2, eps)
    return qd.diagonalize(qd.build_hamiltonian(p))


@pytest.fixture
def spectrum():
    return spectrum_for


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
