import functools

import pytest

from telehaptic.netsim import run

# one line per acceptance criterion, printed in the terminal summary
_VERDICTS = {}


@functools.lru_cache(maxsize=None)
def cached_run(scenario):
    """Scenarios are frozen dataclasses, so identical ones share one simulation."""
    return run(scenario)


@pytest.fixture
def verdict(request):
    """Record ``(criterion number, detail)``; PASS/FAIL follows the test outcome."""
    def record(number, detail):
        _VERDICTS[number] = [detail, request.node.nodeid]
    return record


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when != "call":
        return
    for number, entry in _VERDICTS.items():
        if entry[1] == item.nodeid and len(entry) == 2:
            entry.append("PASS" if rep.passed else "FAIL")


def pytest_terminal_summary(terminalreporter):
    if not _VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_VERDICTS):
        entry = _VERDICTS[number]
        status = entry[2] if len(entry) > 2 else "FAIL"
        terminalreporter.write_line(f"criterion {number:2d}: {status}  {entry[0]}")
