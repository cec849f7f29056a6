import pytest

_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def criterion_log():
    """Callable that records one PASS/FAIL summary line per acceptance criterion."""

    def record(line: str) -> None:
        _ACCEPTANCE_LINES.append(line)
        print(line)

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
