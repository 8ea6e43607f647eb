"""One PASS/FAIL line per acceptance criterion in the terminal summary.

Tests tagged ``@pytest.mark.criterion(n, "title")`` contribute to criterion n;
measured values go through the ``report`` fixture and are echoed on that line.
"""

from collections import defaultdict

import pytest

_RESULTS = defaultdict(lambda: {"title": "", "outcomes": [], "details": []})


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion the test belongs to")


@pytest.fixture
def report(request):
    """Append a 'name=value (tolerance)' note to this test's criterion line."""
    def add(text):
        request.node.user_properties.append(("detail", text))
    return add


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed"):
        entry = _RESULTS[marker.args[0]]
        entry["title"] = marker.args[1]
        entry["outcomes"].append(rep.outcome)
        entry["details"] += [v for k, v in item.user_properties if k == "detail"]


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_RESULTS):
        entry = _RESULTS[n]
        ok = all(o == "passed" for o in entry["outcomes"])
        status = "PASS" if ok else "FAIL"
        line = f"criterion {n}: {status}  {entry['title']}"
        terminalreporter.write_line(line)
        for d in dict.fromkeys(entry["details"]):
            terminalreporter.write_line(f"    {d}")
