import pytest

_RESULTS = {}


@pytest.fixture
def record():
    """Record ``(criterion, passed, detail)``; printed in the terminal summary."""

    def _record(criterion, passed, detail=""):
        _RESULTS[criterion] = (bool(passed), detail)
        line = f"criterion {criterion}: {'PASS' if passed else 'FAIL'}  {detail}"
        print(line)
        return passed

    return _record


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_RESULTS):
        ok, detail = _RESULTS[k]
        terminalreporter.write_line(f"criterion {k:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
