import pytest

_CRITERIA: dict[str, tuple[str, str]] = {}


def pytest_collection_modifyitems(items):
    for item in items:
        marker = item.get_closest_marker("criterion")
        if marker is not None:
            item.user_properties.append(("criterion", marker.args))


@pytest.hookimpl(trylast=True)
def pytest_runtest_logreport(report):
    props = dict(report.user_properties)
    if "criterion" not in props:
        return
    cid, title = props["criterion"]
    if report.when == "call" or (report.when == "setup" and not report.passed):
        outcome = "SKIP" if report.skipped else ("PASS" if report.passed else "FAIL")
        previous = _CRITERIA.get(cid, ("PASS", title))[0]
        # a criterion passes only if every test carrying it passes
        if previous == "FAIL" or (previous == "SKIP" and outcome == "PASS"):
            outcome = previous
        _CRITERIA[cid] = (outcome, title)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for cid in sorted(_CRITERIA, key=lambda c: int(c[2:])):
        outcome, title = _CRITERIA[cid]
        terminalreporter.write_line(f"{outcome} {cid}: {title}")
