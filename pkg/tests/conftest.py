"""Acceptance reporting: one PASS/FAIL line per criterion at the end of the run.

Tests opt in with ``@pytest.mark.acceptance(number, title, limit_s)``. A
criterion passes when every test carrying its number passed and their
summed call time stays under ``limit_s``. Tests may attach a short detail
line with the ``criterion_detail`` fixture.
"""

from collections import defaultdict

import pytest

_results = defaultdict(lambda: {"title": "", "limit": None, "outcomes": [], "seconds": 0.0, "details": []})


@pytest.fixture
def criterion_detail(request):
    def record(text):
        request.node.user_properties.append(("detail", text))
    return record


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    number, title = marker.args[0], marker.args[1]
    entry = _results[number]
    entry["title"] = title
    entry["limit"] = marker.kwargs.get("limit_s")
    # fixtures do most of the solving, so setup time counts toward the limit
    if report.when in ("setup", "call"):
        entry["seconds"] += report.duration
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        entry["outcomes"].append((item.name, report.outcome))
        entry["details"].extend(f"{item.name}: {v}" for k, v in item.user_properties if k == "detail")


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for number in sorted(_results):
        entry = _results[number]
        failed = [name for name, outcome in entry["outcomes"] if outcome != "passed"]
        slow = entry["limit"] is not None and entry["seconds"] > entry["limit"]
        verdict = "PASS" if not failed and not slow else "FAIL"
        timing = f"{entry['seconds']:.2f} s"
        if entry["limit"] is not None:
            timing += f" (limit {entry['limit']} s)"
        tr.write_line(f"criterion {number}: {verdict}  {entry['title']}  [{timing}]")
        for name in failed:
            tr.write_line(f"    failed: {name}")
        if slow:
            tr.write_line("    runtime limit exceeded")
        for detail in entry["details"]:
            tr.write_line(f"    {detail}")
