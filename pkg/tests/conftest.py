import pytest

# Lines recorded by the acceptance suite, echoed in the terminal summary.
ACCEPTANCE_LINES: list = []


@pytest.fixture
def record():
    def add(number: int, ok: bool, detail: str) -> None:
        ACCEPTANCE_LINES.append((number, f"{'PASS' if ok else 'FAIL'}  criterion {number:>2}: {detail}"))

    return add


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
