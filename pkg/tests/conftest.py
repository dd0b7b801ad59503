import pytest

REPORT: list[str] = []


@pytest.fixture
def report():
    """Record a PASS/FAIL line for an acceptance criterion and assert on it."""
    def _report(number, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
        REPORT.append(line)
        print(line)
        assert ok, line
    return _report


def pytest_terminal_summary(terminalreporter):
    if REPORT:
        terminalreporter.section("acceptance criteria")
        for line in REPORT:
            terminalreporter.write_line(line)
