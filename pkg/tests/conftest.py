import os
import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile(
    "default",
    deadline=None,
    max_examples=40,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

E12 = np.array([[0, 1], [0, 0]], dtype=complex)
I2 = np.eye(2, dtype=complex)


def jordan_matrix(blocks):
    """Block-diagonal Jordan matrix from ``[(eigenvalue, size), ...]``."""
    n = sum(s for _, s in blocks)
    J = np.zeros((n, n), dtype=complex)
    k = 0
    for lam, s in blocks:
        for i in range(s):
            J[k + i, k + i] = lam
            if i + 1 < s:
                J[k + i, k + i + 1] = 1.0
        k += s
    return J


def random_frame(rng, n, spread=0.4):
    return np.eye(n) + spread * (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(n)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    from _report import LINES

    if not LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(LINES):
        terminalreporter.write_line(LINES[k])
