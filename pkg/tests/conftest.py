import cmath

import pytest

from selfsim.io import named_system
from selfsim.ifs import validate_system

CORNERS = [1 + 1j, 1 - 1j, -1 + 1j, -1 - 1j]
LAM = 0.35 * cmath.exp(1j)


@pytest.fixture(scope="session")
def sys_a():
    return named_system("SYS-A")


@pytest.fixture(scope="session")
def sys_b():
    return named_system("SYS-B")


@pytest.fixture(scope="session")
def sys_real():
    return validate_system(0.35, CORNERS, [0.25] * 4)
