import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from teleportlab.ising import critical_ground_state

settings.register_profile(
    "default", deadline=None, max_examples=25, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture(scope="session")
def ground():
    """Critical ring ground states keyed by length."""
    cache = {}

    def get(L):
        if L not in cache:
            cache[L] = critical_ground_state(L).state
        return cache[L]

    return get


def random_state(rng, L):
    from teleportlab.state import Statevector

    v = rng.normal(size=2**L) + 1j * rng.normal(size=2**L)
    return Statevector(v / np.linalg.norm(v), L)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is not None and mod.REPORT:
        terminalreporter.section("acceptance criteria")
        for line in mod.REPORT:
            terminalreporter.write_line(line)
