"""Acceptance bookkeeping: tests marked ``criterion(n, title)`` are tallied per criterion."""

from collections import OrderedDict

import pytest

_CRITERIA = OrderedDict()


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        number, title = mark.args
        entry = _CRITERIA.setdefault(number, {"title": title, "ok": True, "failed": []})
        if not rep.passed:
            entry["ok"] = False
            entry["failed"].append(item.name)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        e = _CRITERIA[number]
        status = "PASS" if e["ok"] else "FAIL"
        extra = f"  ({', '.join(e['failed'])})" if e["failed"] else ""
        terminalreporter.write_line(f"criterion {number}: {status}  {e['title']}{extra}")
