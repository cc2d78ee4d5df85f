import pytest

_REPORT: list[str] = []


@pytest.fixture(scope="session")
def report():
    """Record one ``criterion N: PASS|FAIL ...`` line, echoed in the summary."""
    def _add(number, ok, detail):
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        _REPORT.append(line)
        return ok
    return _add


def pytest_terminal_summary(terminalreporter):
    if _REPORT:
        terminalreporter.section("acceptance criteria")
        for line in _REPORT:
            terminalreporter.write_line(line)
