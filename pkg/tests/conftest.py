"""Collect acceptance outcomes and print one line per criterion at the end of the run."""
import pytest

_OUTCOMES = {}  # criterion number -> {"title": str, "tests": [(nodeid, passed)]}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion this test belongs to")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        number, title = mark.args
        entry = _OUTCOMES.setdefault(number, {"title": title, "tests": []})
        entry["tests"].append((item.name, rep.passed))


def pytest_terminal_summary(terminalreporter):
    if not _OUTCOMES:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for number in sorted(_OUTCOMES):
        entry = _OUTCOMES[number]
        failed = [name for name, ok in entry["tests"] if not ok]
        tag = "FAIL" if failed else "PASS"
        tail = f"  (failing: {', '.join(failed)})" if failed else ""
        tr.write_line(f"{tag}  criterion {number:2d}: {entry['title']}{tail}")
