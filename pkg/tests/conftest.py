import math

import numpy as np
import pytest

from bangbang.core import Ball, LoadCase, Material, ProblemSpec, Rectangle, VolumeConstraint
from bangbang.piecewise import PiecewisePoly

ETA = (0.4, 0.4, 0.2)


def three_materials():
    return (Material("M1", 1.0, 1.0), Material("M2", 2.0, 2.0), Material("M3", 3.0, 3.0))


def inner_source():
    """Indicator of the disk r < 1/2 inside the unit ball."""
    return PiecewisePoly.from_spec([(0, 0.5, [1]), (0.5, 1, [0])])


def outer_source():
    return PiecewisePoly.from_spec([(0, 0.5, [0]), (0.5, 1, [1])])


def jump_source():
    """f = -2 on [0, 1] and -1/r on (1, 2]: gives psi = r**2 then 1."""
    return PiecewisePoly.from_spec([(0, 1, [-2]), (1, 2, [-1], -1)])


def ball_problem(loads, eta=ETA, radius=1.0, materials=None):
    ball = Ball(radius, 2)
    mats = three_materials() if materials is None else materials
    return ProblemSpec(ball, mats, VolumeConstraint.from_fractions(eta, ball.measure), loads)


def single_load_problem(eta=ETA):
    return ball_problem([LoadCase(inner_source(), 1.0)], eta)


def two_load_problem(eta=ETA):
    return ball_problem([LoadCase(inner_source(), 3.0), LoadCase(outer_source(), 1.0)], eta)


def disk_problem(eta=ETA, materials=None):
    dom = Rectangle(((-1.0, 1.0), (-1.0, 1.0)), (0.0, 0.0, 1.0))
    mats = three_materials() if materials is None else materials
    return ProblemSpec(dom, mats, VolumeConstraint.from_fractions(eta, dom.measure), [LoadCase(None, 1.0)])


def closed_form_radii():
    return [
        math.sqrt((-0.8 + math.sqrt(0.89)) / 2),
        math.sqrt((-0.4 + math.sqrt(0.41)) / 2),
        math.sqrt((0.4 + math.sqrt(0.41)) / 2),
        math.sqrt((0.8 + math.sqrt(0.89)) / 2),
    ]


TABLE1 = [0.4085, 0.4395, 0.5800, 0.6955, 0.7189, 0.8621]
PRINTED_RADII = [0.2678, 0.3466, 0.7212, 0.9336]


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# acceptance lines, printed together at the end of the session
ACCEPTANCE = {}


def record_acceptance(number, passed, detail):
    line = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}"
    ACCEPTANCE[number] = line
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[k])
