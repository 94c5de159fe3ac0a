"""Collects acceptance-criterion outcomes and prints one line per criterion."""

import pytest

_CRITERIA = {}  # nodeid -> criterion label
_RESULTS = {}   # criterion label -> (outcome, detail)


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(label): end-to-end acceptance criterion")


def pytest_collection_modifyitems(items):
    for item in items:
        marker = item.get_closest_marker("acceptance")
        if marker is not None:
            _CRITERIA[item.nodeid] = marker.args[0]


@pytest.fixture
def measured(request):
    """Attach a human-readable measurement to the acceptance line of this test."""
    def note(text):
        request.node.user_properties.append(("measured", text))
        print(f"[{_CRITERIA.get(request.node.nodeid, '?')}] {text}")
    return note


def pytest_runtest_logreport(report):
    label = _CRITERIA.get(report.nodeid)
    if label is None:
        return
    if report.when == "call" or (report.when == "setup" and not report.passed):
        detail = "; ".join(v for k, v in report.user_properties if k == "measured")
        if report.skipped:
            outcome = "SKIP"
            if isinstance(report.longrepr, tuple):
                detail = report.longrepr[2]
        else:
            outcome = "PASS" if report.passed else "FAIL"
        _RESULTS[label] = (outcome, detail)


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for label in sorted(_RESULTS):
        outcome, detail = _RESULTS[label]
        terminalreporter.write_line(f"{outcome:4s}  {label}: {detail}")
