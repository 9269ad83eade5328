import pytest

_VERDICTS: dict = {}


@pytest.fixture
def verdict():
    """Record one acceptance line: ``verdict(number, title, ok, detail)``."""
    def record(number, title, ok, detail):
        line = f"criterion {number} [{'PASS' if ok else 'FAIL'}] {title}: {detail}"
        _VERDICTS[number] = line
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if not _VERDICTS:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for number in sorted(_VERDICTS):
        terminalreporter.write_line(_VERDICTS[number])
