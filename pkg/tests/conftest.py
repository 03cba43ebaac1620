import pytest

CRITERION_LINES: list[str] = []


@pytest.fixture
def record_criterion():
    def record(result):
        CRITERION_LINES.append(result.report())
        print(result.report())
    return record


def pytest_terminal_summary(terminalreporter):
    if not CRITERION_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for block in CRITERION_LINES:
        for line in block.splitlines():
            terminalreporter.write_line(line)
