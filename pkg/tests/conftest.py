import numpy as np
import pytest

from mpca2 import MatrixDataset


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_dataset(rng, n=6, p=4, q=3, scale=1.0):
    return MatrixDataset(scale * rng.standard_normal((n, p, q)))


def random_frame(rng, rows, cols):
    Q, _ = np.linalg.qr(rng.standard_normal((rows, cols)))
    return Q


_ACCEPTANCE = []


@pytest.fixture
def acceptance_log():
    return _ACCEPTANCE


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for line in _ACCEPTANCE:
        terminalreporter.write_line(line)
