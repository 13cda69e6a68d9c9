import pytest

_VERDICTS: dict[int, str] = {}


@pytest.fixture
def verdict():
    """record(n, ok, detail): print one pass/fail line for criterion n and assert it."""

    def record(num: int, ok: bool, detail: str) -> None:
        line = f"{'PASS' if ok else 'FAIL'}  criterion {num:>2}  {detail}"
        _VERDICTS[num] = line
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if _VERDICTS:
        terminalreporter.section("acceptance criteria")
        for num in sorted(_VERDICTS):
            terminalreporter.write_line(_VERDICTS[num])
