import pytest

from ioncat.hilbert import SystemParams


@pytest.fixture
def working_point():
    """Gamma = 1, eta = 0.05, alpha = 2: the default working point."""
    return SystemParams(gamma=1.0, eta=0.05, alpha=2.0, M=40)


@pytest.fixture
def lossless_params():
    return SystemParams(gamma=0.0, eta=0.05, alpha=2.0, M=40)


# one line per acceptance criterion, filled in by tests/test_acceptance.py
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
