import sys
from importlib import resources

import numpy as np
import pytest

from nmrqsim import SpinSystem, load_spin_system


def data_path(name: str):
    return resources.files("nmrqsim") / "data" / name


def random_couplings(rng, n, jmax, density=1.0):
    jm = np.zeros((n, n))
    for k in range(n):
        for l in range(k + 1, n):
            if rng.random() < density:
                jm[k, l] = jm[l, k] = rng.uniform(-jmax, jmax)
    return jm


def random_system(rng, n, spread_hz=400.0, jmax=15.0, base_hz=None, density=1.0, name="random"):
    """Offsets ``base + U(-spread, spread)`` Hz with couplings ``U(-jmax, jmax)``."""
    base = rng.uniform(200.0, 3500.0) if base_hz is None else base_hz
    offsets = base + rng.uniform(-spread_hz, spread_hz, n)
    return SpinSystem.from_offsets_hz(offsets, random_couplings(rng, n, jmax, density), name=name)


@pytest.fixture
def atp():
    return load_spin_system(data_path("atp.json"))


@pytest.fixture
def two_spin():
    """AB system: offsets 100 and 300 Hz, J = 10 Hz."""
    return load_spin_system(data_path("two_spin.json"))


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
