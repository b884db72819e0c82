import re

import pytest
from hypothesis import settings

# first calls pay numba compile time
settings.register_profile("skewlab", deadline=None)
settings.load_profile("skewlab")

_ACCEPT = {}
_DETAIL = {}


@pytest.fixture
def detail(request):
    """Record a one-line measurement summary for the acceptance report."""
    def record(text):
        request.node.user_properties.append(("detail", text))
        print(text)
    return record


def pytest_runtest_logreport(report):
    m = re.search(r"test_acceptance\.py::test_criterion_(\d+)_(\w+)", report.nodeid)
    if not m:
        return
    key = (int(m.group(1)), m.group(2))
    for k, v in report.user_properties:
        if k == "detail":
            _DETAIL[key] = v
    if report.when == "call" or report.outcome != "passed":
        if report.when == "call" or key not in _ACCEPT:
            _ACCEPT[key] = report.outcome
        elif report.outcome == "failed":
            _ACCEPT[key] = "failed"


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPT:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for (num, name), outcome in sorted(_ACCEPT.items()):
        tag = "PASS" if outcome == "passed" else outcome.upper()
        tr.write_line(f"criterion {num:2d} {tag:7s} {name.replace('_', ' ')}")
        if (num, name) in _DETAIL:
            tr.write_line(f"    {_DETAIL[(num, name)]}")
    n_pass = sum(o == "passed" for o in _ACCEPT.values())
    tr.write_line(f"{n_pass}/{len(_ACCEPT)} acceptance criteria passed")
