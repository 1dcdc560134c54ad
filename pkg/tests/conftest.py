import sys
from dataclasses import dataclass

import numpy as np
import pytest

from hdqp import datagen


@dataclass
class Setup:
    sigma: np.ndarray
    root: np.ndarray
    sigma_inv: np.ndarray
    v1: np.ndarray
    mu: np.ndarray

    @property
    def v(self):
        return np.column_stack([self.v1, self.mu])

    @property
    def m(self):
        v = self.v
        return v.T @ self.sigma_inv @ v


_CACHE = {}


def simulation_setup(p):
    """Toeplitz(0.4) covariance with constraint ranks at 90% and 15% of ``p``."""
    if p not in _CACHE:
        sigma = datagen.toeplitz_sigma(p, 0.4)
        v1, mu = datagen.build_constraints(sigma, int(0.9 * p), int(0.15 * p), 0.3)
        inv = np.linalg.inv(sigma)
        _CACHE[p] = Setup(sigma, datagen.sqrt_psd(sigma), 0.5 * (inv + inv.T), v1, mu)
    return _CACHE[p]


@pytest.fixture(scope="session")
def small_setup():
    return simulation_setup(100)


@pytest.fixture(scope="session")
def large_setup():
    return simulation_setup(1000)


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "LINES", [])
    if lines:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(lines, key=lambda text: int(text.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
