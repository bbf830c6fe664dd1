from pathlib import Path

import numpy as np
import pytest

DATA = Path(__file__).parent / "data"


def sparse(total, entries):
    x = np.zeros(total)
    for k, v in entries.items():
        x[k - 1] = v
    return x


# sparse vector over 3x4x2 used across the vector tests
X_SPARSE = sparse(24, {14: 2, 16: 1, 22: -2, 24: -1})
X_PERTURBED = sparse(24, {14: 2, 16: 4, 22: -2, 24: -1})

MAT_4x6 = np.array(
    [[0, 0, 0, 1, 2, -1], [0, 0, 0, 1, 0, -2], [-1, -2, 1, 1, 2, -1], [-1, 0, 2, 1, 0, -2]], float
)


def random_monic(rng, n, zero_prob=0.3):
    """Random monic vector of length n with a random head position."""
    head = int(rng.integers(0, n))
    v = np.zeros(n)
    v[head] = 1.0
    tail = rng.uniform(0.5, 2.0, n - head - 1) * rng.choice([-1, 1], n - head - 1)
    tail[rng.random(n - head - 1) < zero_prob] = 0.0
    v[head + 1 :] = tail
    return v


def random_entries(rng, shape, zero_prob=0.2):
    """Entries from {0} and +-U[0.5, 2]."""
    a = rng.uniform(0.5, 2.0, shape) * rng.choice([-1, 1], shape)
    a[rng.random(shape) < zero_prob] = 0.0
    return a


@pytest.fixture
def rng():
    return np.random.default_rng(20261015)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
