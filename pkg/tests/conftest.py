"""Collects acceptance outcomes per criterion and prints one PASS/FAIL line for each."""
import pytest

_OUTCOMES = pytest.StashKey[dict]()


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): test belongs to acceptance criterion n")
    config.stash[_OUTCOMES] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    ok = report.passed and not hasattr(report, "wasxfail")
    if report.when == "call" or not ok:
        results = item.config.stash[_OUTCOMES].setdefault(marker.args[0], [])
        results.append((item.name, ok, getattr(report, "wasxfail", "")))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    outcomes = config.stash[_OUTCOMES]
    if not outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(outcomes):
        rows = outcomes[n]
        failed = [name for name, ok, _ in rows if not ok]
        status = "FAIL" if failed else "PASS"
        line = f"criterion {n:2d}: {status} ({len(rows) - len(failed)}/{len(rows)} checks)"
        if failed:
            line += " failing: " + ", ".join(failed)
        terminalreporter.write_line(line)
        for name, ok, why in rows:
            if why:
                terminalreporter.write_line(f"    {name}: {why}")
