import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# -- acceptance summary: one line per criterion, printed after the run --------

_CRITERIA = {}


@pytest.fixture
def criterion(request):
    """Dict for a test's headline numbers; shown next to its pass/fail line."""
    mark = request.node.get_closest_marker("criterion")
    entry = _CRITERIA.setdefault(request.node.nodeid, {"mark": mark.args, "outcome": "passed", "detail": {}})
    return entry["detail"]


def pytest_runtest_logreport(report):
    entry = _CRITERIA.get(report.nodeid)
    if entry is not None and report.failed:
        entry["outcome"] = "failed"


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for entry in sorted(_CRITERIA.values(), key=lambda e: e["mark"][0]):
        n, title = entry["mark"]
        status = "PASS" if entry["outcome"] == "passed" else "FAIL"
        detail = ", ".join(f"{k}={v}" for k, v in entry["detail"].items())
        terminalreporter.write_line(f"{status} criterion {n:2d} {title}: {detail}")
