import numpy as np
import pytest

from repdyn.matrixcore import PAULI


@pytest.fixture
def pauli():
    return PAULI.copy()


@pytest.fixture
def sl2_rep():
    E = np.array([[0, 1], [0, 0]], dtype=complex)
    return np.array([E, E.T, np.diag([1, -1])], dtype=complex)


@pytest.fixture
def so3_rep():
    return -0.5j * PAULI


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_ACCEPTANCE: list[str] = []


@pytest.fixture
def acceptance():
    """Record one PASS/FAIL line per acceptance criterion; fails the test on FAIL."""

    def record(number: int, title: str, ok: bool, detail: str):
        line = f"[{'PASS' if ok else 'FAIL'}] {number:2d} {title}: {detail}"
        _ACCEPTANCE.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE, key=lambda l: int(l.split()[1])):
            terminalreporter.write_line(line)
