import pytest

_results: dict = {}
_titles: dict = {}


def pytest_runtest_logreport(report):
    num = getattr(report, "_acceptance", None)
    if num is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        prev = _results.get(num, "PASS")
        _results[num] = prev if report.outcome == "passed" and prev == "PASS" else "FAIL"


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("acceptance")
    if mark is not None:
        num, title = mark.args
        rep._acceptance = num
        _titles[num] = title


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_results):
        terminalreporter.write_line(f"[{_results[num]}] {num:>2}. {_titles[num]}")
