import pytest

ACCEPTANCE_LINES = []


@pytest.fixture
def report():
    """Record one pass/fail line for the acceptance summary."""

    def _report(number, ok, detail):
        ACCEPTANCE_LINES.append((number, ok, detail))
        print(f"criterion {number}: {'PASS' if ok else 'FAIL'} {detail}")

    return _report


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number, ok, detail in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] criterion {number:>2}: {detail}")
