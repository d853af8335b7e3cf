import pytest

_ACCEPTANCE = {}


class Criterion:
    """Record one acceptance criterion's outcome, then assert it."""

    def __init__(self, number: int, title: str):
        self.number = number
        self.title = title

    def check(self, ok: bool, detail: str) -> None:
        _ACCEPTANCE[self.number] = (self.title, bool(ok), detail)
        assert ok, f"criterion {self.number} ({self.title}): {detail}"


@pytest.fixture
def criterion():
    return Criterion


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_ACCEPTANCE):
        title, ok, detail = _ACCEPTANCE[n]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {n:2d}. {title}: {detail}")
