import numpy as np
import pytest

from corrdyn.network import build_network


def random_network(rng: np.random.Generator, n: int, uniform_energy: bool = False):
    eps = np.full(n, rng.normal()) if uniform_energy else rng.normal(size=n)
    k = rng.normal(size=(n, n))
    k = np.triu(k, 1)
    k = k + k.T
    gam = rng.uniform(0.1, 3.0, size=n)
    return build_network(eps, k, gam)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import REPORT
    except ImportError:
        return
    if not REPORT:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(REPORT, key=lambda k: int(k.split()[0])):
        terminalreporter.write_line(REPORT[key])
