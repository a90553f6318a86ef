"""Prints one PASS/FAIL line per acceptance criterion at the end of the run."""
import pytest

_results = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(tag, title): acceptance criterion reported in the summary")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("acceptance")
    if mark is None or rep.when != "call" and not (rep.when == "setup" and rep.outcome != "passed"):
        return
    tag, title = mark.args
    if hasattr(rep, "wasxfail"):
        status = "FAIL (expected: " + rep.wasxfail + ")" if rep.skipped else "PASS (unexpected)"
    else:
        status = "PASS" if rep.passed else "FAIL"
    _results[tag] = f"{tag} {status}  {title}"


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for tag in sorted(_results, key=lambda s: int(s.split("-")[1])):
        terminalreporter.write_line(_results[tag])
