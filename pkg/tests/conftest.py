import numpy as np
import pytest

from nshutter.linalg import SpaceShape, StateVector
from nshutter.shutter import default_scenario

SQ2, SQ3, SQ6 = np.sqrt(2), np.sqrt(3), np.sqrt(6)


@pytest.fixture
def shutter3():
    return SpaceShape.single("shutter", "abc")


@pytest.fixture
def photon2():
    return SpaceShape.single("photon", ["a'", "b'"])


@pytest.fixture
def scenario():
    return default_scenario()


def random_state(rng, shape):
    v = rng.normal(size=shape.dim) + 1j * rng.normal(size=shape.dim)
    return StateVector(shape, v / np.linalg.norm(v), normalized=True)


def pytest_terminal_summary(terminalreporter):
    from .test_acceptance import RESULTS, _line

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for r in RESULTS:
            terminalreporter.write_line(_line(r))
