import math
from pathlib import Path

import numpy as np
import pytest

from stokes_resolvent import SlabGrid, TorusGrid

DATA_DIR = Path(__file__).parent / "data"

ACCEPTANCE = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[ACCEPTANCE] = {}


@pytest.fixture
def acceptance(request):
    """Record one acceptance criterion; the lines are printed in the terminal summary."""
    results = request.config.stash[ACCEPTANCE]

    def record(number, title, passed, detail=""):
        results[number] = (title, bool(passed), detail)
        print(f"[{'PASS' if passed else 'FAIL'}] {number:2d}. {title}: {detail}")
        return bool(passed)

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = config.stash.get(ACCEPTANCE, {})
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        title, passed, detail = results[number]
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] {number:2d}. {title}: {detail}")


@pytest.fixture
def torus2():
    return TorusGrid.cube(2, 16)


@pytest.fixture
def torus3():
    return TorusGrid.cube(3, 8)


@pytest.fixture
def slab2():
    return SlabGrid.make(2, 32, 33, 8.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def sector_lambdas(theta=math.pi / 4):
    """A spread of spectral parameters inside the sector of half-angle pi - theta."""
    span = math.pi - theta
    return [r * np.exp(1j * a * span) for r in (1e-2, 1.0, 37.0) for a in (0.0, 0.6, -0.9)]
