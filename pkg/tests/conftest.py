"""Collect one pass/fail line per acceptance criterion.

Tests opt in with ``@pytest.mark.acceptance(number, title)``; several tests
may share a number, in which case the criterion passes only if all do.
"""

import pytest

_results = {}


def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("acceptance")
        if mark is not None:
            number, title = mark.args
            item.user_properties.append(("acceptance", (number, title)))


def pytest_runtest_logreport(report):
    tag = dict(report.user_properties).get("acceptance")
    if tag is None:
        return
    if report.when == "call" or report.failed or report.skipped:
        status = "PASS" if report.passed else ("SKIP" if report.skipped else "FAIL")
        number, title = tag
        prev = _results.get(number, (title, []))
        prev[1].append(status)
        _results[number] = prev


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_results):
        title, statuses = _results[number]
        if "FAIL" in statuses:
            status = "FAIL"
        elif all(s == "PASS" for s in statuses):
            status = "PASS"
        else:
            status = "SKIP"
        terminalreporter.write_line(f"criterion {number}: {status}  {title}")
