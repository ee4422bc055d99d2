"""Shared fixtures: a few solved model problems reused across test files."""
import math

import pytest

from weyllab import assemble, build_mesh, interval, lowest_eigs, rectangle

PI = math.pi


@pytest.fixture(scope="session")
def interval_op():
    """Unit-weight interval (0, pi) at h = pi/400."""
    return assemble(build_mesh(interval(PI), PI / 400))


@pytest.fixture(scope="session")
def interval_spec(interval_op):
    return lowest_eigs(interval_op, 25)


@pytest.fixture(scope="session")
def square_op():
    """Unit square at h = 1/32 (961 interior nodes)."""
    return assemble(build_mesh(rectangle(1.0, 1.0), 1 / 32))


@pytest.fixture(scope="session")
def square_spec(square_op):
    return lowest_eigs(square_op, 40)
