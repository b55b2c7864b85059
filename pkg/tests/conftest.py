import pytest

from tmp_idan.motion import MotionPlannerHandle

# criterion number -> (description, passed)
ACCEPTANCE_RESULTS: dict[int, tuple[str, bool]] = {}


@pytest.fixture
def grid():
    return MotionPlannerHandle("grid")


@pytest.fixture
def record_acceptance():
    def record(number: int, description: str, passed: bool):
        ACCEPTANCE_RESULTS[number] = (description, passed)
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_RESULTS):
        description, passed = ACCEPTANCE_RESULTS[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if passed else 'FAIL'}  {description}")
