"""Collects acceptance outcomes and prints one PASS/FAIL line per criterion."""

import pytest

_OUTCOMES: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.fixture
def measured(request):
    """Dict the test fills with the values it measured; shown in the summary."""
    marker = request.node.get_closest_marker("criterion")
    entry = _OUTCOMES.setdefault(marker.args[0], {"title": marker.args[1], "values": {}, "passed": True})
    return entry["values"]


def pytest_runtest_logreport(report):
    if report.when != "call" and not report.failed:
        return
    for number, entry in _OUTCOMES.items():
        if report.nodeid.endswith(f"test_criterion_{number:02d}"):
            entry["passed"] = entry["passed"] and report.passed


def pytest_terminal_summary(terminalreporter):
    if not _OUTCOMES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_OUTCOMES):
        entry = _OUTCOMES[number]
        status = "PASS" if entry["passed"] else "FAIL"
        values = ", ".join(f"{k}={v:.6g}" if isinstance(v, float) else f"{k}={v}" for k, v in entry["values"].items())
        terminalreporter.write_line(f"{status}  [{number:2d}] {entry['title']}  ({values})")
