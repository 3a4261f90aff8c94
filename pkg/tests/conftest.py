"""Per-criterion PASS/FAIL summary for the acceptance suite."""

from collections import OrderedDict

import pytest

_RESULTS: "OrderedDict[int, dict]" = OrderedDict()


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion a test belongs to")


def pytest_collection_modifyitems(items):
    for item in items:
        m = item.get_closest_marker("criterion")
        if m is not None:
            number, title = m.args
            entry = _RESULTS.setdefault(number, {"title": title, "tests": {}})
            entry["tests"][item.nodeid] = None


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    m = item.get_closest_marker("criterion")
    if m is None:
        return
    tests = _RESULTS[m.args[0]]["tests"]
    if rep.failed:
        tests[item.nodeid] = False
    elif rep.when == "call" and rep.passed and tests.get(item.nodeid) is None:
        tests[item.nodeid] = True


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_RESULTS):
        entry = _RESULTS[number]
        states = list(entry["tests"].values())
        if any(s is False for s in states):
            verdict = "FAIL"
        elif states and all(s is True for s in states):
            verdict = "PASS"
        else:
            verdict = "NOT RUN"
        terminalreporter.write_line(f"criterion {number}: {verdict}  {entry['title']}")
