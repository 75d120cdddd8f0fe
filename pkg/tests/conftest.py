import math
import sys

import numpy as np
import pytest
from hypothesis import settings

from staircase_ttd.codebook import DesignSpec
from staircase_ttd.wavefield import ArrayConfig, OfdmGrid

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

F_C = 60e9
BW = 2e9


@pytest.fixture
def grid():
    return OfdmGrid(F_C, BW, 4096)


@pytest.fixture
def cfg32():
    return ArrayConfig(32)


@pytest.fixture
def k3_spec(grid, cfg32):
    return DesignSpec(3, math.radians(-30), math.radians(45), grid, cfg32)


def cell(angle_count: int = 2048) -> float:
    return 2.0 / angle_count


def rng(seed=0):
    return np.random.default_rng(seed)


def pytest_terminal_summary(terminalreporter):
    acceptance = sys.modules.get("test_acceptance")
    if acceptance is None or not acceptance.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(acceptance.RESULTS):
        terminalreporter.write_line(acceptance.RESULTS[number])
