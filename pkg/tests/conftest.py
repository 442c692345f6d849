"""Shared test infrastructure: the acceptance-criterion reporter.

Acceptance tests register themselves with :func:`criterion`; a terminal
summary hook prints one PASS/FAIL line per criterion at the end of the run.
"""

import pytest

_RESULTS: dict[str, tuple[str, str]] = {}


def record_criterion(name: str, outcome: str, detail: str = "") -> None:
    _RESULTS[name] = (outcome, detail)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    criterion = getattr(item, "_acceptance_criterion", None)
    if criterion and report.when == "call":
        if report.passed:
            status = "PASS"
        elif report.skipped:
            status = "SKIP"
        else:
            status = "FAIL"
        detail = _RESULTS.get(criterion, ("", ""))[1]
        _RESULTS[criterion] = (status, detail)


@pytest.fixture
def criterion(request):
    """Mark the running test as one acceptance criterion and collect detail."""

    def _register(name: str, detail: str = "") -> None:
        request.node._acceptance_criterion = name
        _RESULTS.setdefault(name, ("RUNNING", detail))
        if detail:
            _RESULTS[name] = (_RESULTS[name][0], detail)

    return _register


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _RESULTS:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for name, (status, detail) in _RESULTS.items():
        suffix = f"  [{detail}]" if detail else ""
        terminalreporter.write_line(f"{status:4s}  {name}{suffix}")
