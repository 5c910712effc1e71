import pytest

_ACCEPTANCE = {}


@pytest.fixture
def verdict():
    """verdict(n, ok, detail) records one acceptance line and returns ok."""
    def record(n, ok, detail=""):
        _ACCEPTANCE[str(n)] = (bool(ok), detail)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_ACCEPTANCE, key=lambda s: (int(s.split()[0]), s)):
        ok, detail = _ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:>2s}: {'PASS' if ok else 'FAIL'}  {detail}")
