import os

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", max_examples=100, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", max_examples=30, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("thorough", max_examples=1000, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

_ACCEPTANCE: dict = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    crit = marker.args[0]
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        status = {"passed": "PASS", "failed": "FAIL", "skipped": "SKIP"}[report.outcome]
        details = [str(v) for k, v in report.user_properties if k == "detail"]
        if report.outcome == "skipped" and isinstance(report.longrepr, tuple):
            details.append(report.longrepr[2])
        previous = _ACCEPTANCE.get(crit)
        # a criterion split over several tests passes only if all of them do
        if previous is None:
            _ACCEPTANCE[crit] = (status, details)
        else:
            prev_status, prev_details = previous
            if prev_status == "PASS" or status == "FAIL":
                prev_status = status
            _ACCEPTANCE[crit] = (prev_status, prev_details + details)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for crit in sorted(_ACCEPTANCE, key=lambda c: int(c[2:])):
        status, details = _ACCEPTANCE[crit]
        suffix = f"  ({'; '.join(details)})" if details else ""
        terminalreporter.write_line(f"{crit} {status}{suffix}")
