import pytest

_LINES: list[str] = []


@pytest.fixture(scope="session")
def criterion():
    """record(number, title, ok, detail) -> ok; lines are echoed in the terminal summary."""
    def record(number, title, ok, detail=""):
        line = f"criterion {number} [{'PASS' if ok else 'FAIL'}] {title}"
        _LINES.append(line + (f": {detail}" if detail else ""))
        print(_LINES[-1])
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
