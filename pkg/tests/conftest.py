import re

import pytest

_RESULTS = {}
_SELECTED = set()


def pytest_collection_finish(session):
    for item in session.items:
        m = re.match(r"test_criterion_(\d+)", item.name)
        if m:
            _SELECTED.add(int(m.group(1)))


@pytest.fixture
def report():
    """Record one acceptance outcome: ``report(number, passed, detail)``."""
    def _record(number, passed, detail):
        _RESULTS[number] = (passed, detail)
        print(f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}")
        return passed
    return _record


def pytest_terminal_summary(terminalreporter):
    if not _SELECTED:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_SELECTED):
        passed, detail = _RESULTS.get(number, (False, "did not complete"))
        terminalreporter.write_line(f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}")
