"""Shared pytest plumbing: the acceptance summary block."""
import pytest


def pytest_configure(config):
    config._acceptance_lines = {}


@pytest.fixture(scope="session")
def criterion(request):
    """Record one acceptance summary line. Tests call this before their
    asserts so a failing criterion still reports itself."""
    def record(number: int, passed: bool, detail: str) -> None:
        request.config._acceptance_lines[number] = (passed, detail)
    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_acceptance_lines", {})
    if not lines:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for number in sorted(lines):
        passed, detail = lines[number]
        word = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"criterion {number}: {word} - {detail}")
