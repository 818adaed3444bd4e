import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

# acceptance outcomes, one line per criterion, echoed in the terminal summary
ACCEPTANCE_LINES: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])


@pytest.fixture
def acceptance():
    """Record ``(key, passed, detail)`` and echo the line immediately."""
    def record(key: str, passed: bool, detail: str) -> bool:
        line = f"criterion {int(key):>2} {'PASS' if passed else 'FAIL'}: {detail}"
        ACCEPTANCE_LINES[key] = line
        print(line)
        return passed
    return record
