import pytest

CRITERIA_LINES = []


def pytest_terminal_summary(terminalreporter):
    if CRITERIA_LINES:
        terminalreporter.section("acceptance criteria")
        for line in CRITERIA_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def record_criterion():
    def record(result):
        CRITERIA_LINES.append(result.line())
        print(result.line())
        return result

    return record
