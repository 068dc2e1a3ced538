import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def random_psd(rng, n, rank=None):
    G = rng.normal(size=(n, n + 2 if rank is None else rank))
    return G @ G.T / G.shape[1]


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def L2():
    return np.array([[2.0, 1.0], [1.0, 2.0]])


# one line per acceptance criterion, repeated in the terminal summary
ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
