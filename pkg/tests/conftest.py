import sys

import numpy as np
import pytest

from platewave.forward import PlateParams, assemble
from platewave.geometry import discretize, star_curve, translate
from platewave.operator import DirectionSet, synthesize

TWO_PI = 2 * np.pi


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Replay the acceptance scoreboard, which capture otherwise hides."""
    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "RESULT_LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def params():
    return PlateParams(k=TWO_PI, nu=0.3)


@pytest.fixture(scope="session")
def star5():
    return star_curve(0.3, 5)


@pytest.fixture(scope="session")
def mesh288(star5):
    return discretize(star5, 288)


@pytest.fixture(scope="session")
def sysmat288(mesh288, params):
    return assemble(mesh288, params)


@pytest.fixture(scope="session")
def mesh576(star5):
    return discretize(star5, 576)


@pytest.fixture(scope="session")
def sysmat576(mesh576, params):
    return assemble(mesh576, params)


@pytest.fixture(scope="session")
def ff128(mesh288, params, sysmat288):
    """Clean 128 x 128 far-field matrix for the 5-arms domain at k = 2 pi."""
    dirs = DirectionSet.uniform(128)
    return synthesize(mesh288, params, dirs, dirs, sysmat=sysmat288)


@pytest.fixture(scope="session")
def three_stars():
    centers = [(2.0, 2.5), (2.0, -2.5), (-2.0, 0.0)]
    return [translate(star_curve(0.3, 5), c) for c in centers]


@pytest.fixture(scope="session")
def ff_multi(three_stars):
    """Example-4 configuration: three 5-arms obstacles, k = 2 pi, clean."""
    params = PlateParams(k=TWO_PI, nu=0.3)
    meshes = [discretize(c, 416) for c in three_stars]
    dirs = DirectionSet.uniform(128)
    return synthesize(meshes, params, dirs, dirs, sysmat=assemble(meshes, params))
