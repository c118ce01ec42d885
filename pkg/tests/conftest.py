import collections

import pytest

_OUTCOMES = collections.OrderedDict()
_TITLES = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(id, title): acceptance criterion covered by the test")


def _key(cid: str):
    digits = "".join(ch for ch in cid if ch.isdigit())
    return (int(digits or 0), cid)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    cid = str(mark.args[0])
    _TITLES.setdefault(cid, mark.args[1] if len(mark.args) > 1 else "")
    results = _OUTCOMES.setdefault(cid, [])
    if report.when == "call" or (report.when == "setup" and not report.passed):
        results.append(report.passed)


def pytest_terminal_summary(terminalreporter):
    if not _OUTCOMES:
        return
    terminalreporter.section("acceptance criteria")
    for cid in sorted(_OUTCOMES, key=_key):
        results = _OUTCOMES[cid]
        status = "PASS" if results and all(results) else "FAIL"
        terminalreporter.write_line(f"criterion {cid:<4} {status}  {_TITLES[cid]}")
