import numpy as np
import pytest
from hypothesis import settings

from swiftce.codebook import Side, build_codebook
from swiftce.geometry import SystemDims

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def dims():
    return SystemDims()


@pytest.fixture
def small_dims():
    return SystemDims(8, 4, 2, 2)


def codebooks_for(d: SystemDims):
    return build_codebook(d.n_bs, Side.BS), build_codebook(d.n_ue, Side.UE)


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
