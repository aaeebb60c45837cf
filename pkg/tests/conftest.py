import pytest

ACCEPTANCE: dict[int, tuple[str, bool, str]] = {}


@pytest.fixture
def criterion():
    """Record the outcome of one acceptance criterion for the terminal summary."""

    def record(number: int, title: str, ok: bool, detail: str = "") -> None:
        ACCEPTANCE[number] = (title, bool(ok), detail)

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        title, ok, detail = ACCEPTANCE[number]
        line = f"{'PASS' if ok else 'FAIL'}  {number}. {title}"
        if detail:
            line += f"  -- {detail}"
        terminalreporter.write_line(line)
