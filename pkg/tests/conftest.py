import sys
from fractions import Fraction as F
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from rigicert.model import MemberKind, framework_from_points

REPO = Path(__file__).resolve().parent.parent
FRAMEWORKS = REPO / "frameworks"


@pytest.fixture(scope="session")
def frameworks_dir() -> Path:
    return FRAMEWORKS


@pytest.fixture
def triangle():
    return framework_from_points(
        2, [(0, 0), (1, 0), (0, 1)],
        [(1, 2, MemberKind.BAR), (2, 3, MemberKind.BAR), (1, 3, MemberKind.BAR)],
    )


@pytest.fixture
def square_cycle():
    return framework_from_points(
        2, [(0, 0), (1, 0), (1, 1), (0, 1)],
        [(1, 2, MemberKind.BAR), (2, 3, MemberKind.BAR), (3, 4, MemberKind.BAR), (1, 4, MemberKind.BAR)],
    )


def make_square_in_square():
    points = [
        (-1, 1), (1, 1), (1, -1), (-1, -1),
        (F(-1, 2), F(1, 2)), (F(1, 2), F(1, 2)), (F(1, 2), F(-1, 2)), (F(-1, 2), F(-1, 2)),
    ]
    pairs = [(1, 2), (2, 3), (3, 4), (1, 4), (5, 6), (6, 7), (7, 8), (5, 8), (1, 5), (2, 6), (3, 7), (4, 8)]
    return framework_from_points(2, points, [(i, j, MemberKind.BAR) for i, j in pairs])


@pytest.fixture
def square_in_square():
    return make_square_in_square()


def paper_z() -> np.ndarray:
    z = np.zeros((8, 2))
    z[[0, 1, 4, 5], 0] = 1.0
    return z


def paper_w() -> np.ndarray:
    w = np.zeros((8, 2))
    w[4] = (1, 1)
    w[5] = (1, -1)
    w[6] = (-1, -1)
    w[7] = (-1, 1)
    return w


def normalized_sis_stress(framework):
    """The one-dimensional stress of the square-in-square framework scaled so
    the outer edges carry -1 (then connectors carry 4 and inner edges 2)."""
    from rigicert.model import StressField
    from rigicert.prestress import stress_space

    space = stress_space(framework)
    assert space.dimension == 1
    vec = space.basis[0]
    idx = [m.pair for m in framework.members].index((1, 2))
    vec = vec / vec[idx] * -1.0
    return StressField(tuple(float(x) for x in vec))
