import numpy as np
import pytest

from elastic_tilings.lattice import Lattice
from elastic_tilings.weighting import WeightingFamily, build_weighting


@pytest.fixture
def rng():
    return np.random.default_rng(20261016)


def weighting(d, L, n, kind="constant", scale=None, norm="euclidean"):
    return build_weighting(WeightingFamily(kind, scale, norm), Lattice(d, L), n)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
