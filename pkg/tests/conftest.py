import math
import os
import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

from spindle.ball_poly import build_ball_polyhedron  # noqa: E402

settings.register_profile("repo", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("repo")


def tetra_points(edge=0.5):
    T = np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]], float)
    return T * edge / (2 * math.sqrt(2))


@pytest.fixture(scope="session")
def ball():
    return build_ball_polyhedron(np.zeros((1, 3)))


@pytest.fixture(scope="session")
def lens():
    return build_ball_polyhedron(np.array([[0, 0, 0], [1, 0, 0.0]]))


@pytest.fixture(scope="session")
def tetra():
    return build_ball_polyhedron(tetra_points())


@pytest.fixture(scope="session")
def random_bodies():
    from oracles import random_generator_set
    rng = np.random.default_rng(2024)
    out = []
    for m in (3, 5, 8, 12, 20, 30):
        out.append(build_ball_polyhedron(random_generator_set(rng, m, rng.uniform(0.3, 1.0))))
    return out


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
