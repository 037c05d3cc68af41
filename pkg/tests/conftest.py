"""Collects acceptance outcomes and prints one line per criterion at the end."""

import pytest

_OUTCOMES: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion the test belongs to")


@pytest.fixture()
def acceptance_note(request):
    """Attach a short note to the criterion of the running test."""
    marker = request.node.get_closest_marker("criterion")

    def note(text: str) -> None:
        n, title = marker.args
        _OUTCOMES.setdefault(n, {"title": title, "passed": 0, "failed": 0})["note"] = text

    return note


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    n, title = marker.args
    entry = _OUTCOMES.setdefault(n, {"title": title, "passed": 0, "failed": 0})
    if rep.when == "call":
        entry["passed" if rep.passed else "failed"] += 1
    elif rep.failed:
        entry["failed"] += 1


def pytest_terminal_summary(terminalreporter):
    if not _OUTCOMES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_OUTCOMES):
        e = _OUTCOMES[n]
        verdict = "PASS" if e["failed"] == 0 and e["passed"] > 0 else "FAIL"
        total = e["passed"] + e["failed"]
        line = f"criterion {n:2d} {verdict}  {e['title']} ({e['passed']}/{total} cases)"
        if e.get("note"):
            line += f"; {e['note']}"
        terminalreporter.write_line(line)
