import numpy as np
import pytest

from hopfch2.curves import great_circle_curve
from hopfch2.frames import ModelParams
from hopfch2.reconstruction import GridSpec, build_patch

# Chart used for the gated patches: t - s stays in [0.6, 1.1], away from the
# singular set t - s in {0, pi} and from the focal line near t - s = pi/2.
S_RANGE = (0.0, 0.25)
T_RANGE = (0.85, 1.1)

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def circles():
    c1 = great_circle_curve([1, 0], [0, 1])
    c2 = great_circle_curve(np.array([1j, 0]), np.array([0, 1j]))
    return c1, c2


def make_patch(circles, phi, shape=(16, 16, 8), r=1.0):
    grid = GridSpec(*shape, s_range=S_RANGE, t_range=T_RANGE)
    return build_patch(circles[0], circles[1], ModelParams(r, phi), grid)


@pytest.fixture(scope="session")
def patches(circles):
    return {phi: make_patch(circles, phi) for phi in (0.0, 0.5, -0.5)}


@pytest.fixture(scope="session")
def reports(patches):
    from hopfch2.verify import verify_patch

    return {phi: verify_patch(p) for phi, p in patches.items()}


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
