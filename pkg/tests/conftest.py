from pathlib import Path

import pytest

from depthmask import DepthBins

DATA = Path(__file__).parent / "data"

# filled by test_acceptance, echoed after the run so the verdicts show up
# without -s
ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def bins80():
    return DepthBins(80, 2.0, 80.0)


@pytest.fixture
def bins64():
    return DepthBins(64, 2.0, 80.0)


@pytest.fixture
def kitti_dir():
    return DATA / "kitti"


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
