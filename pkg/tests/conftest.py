from collections import OrderedDict

import pytest

# criterion number -> (title, outcomes of its tests)
_CRITERIA: "OrderedDict[int, list]" = OrderedDict()
_TITLES = {}


def pytest_collection_modifyitems(items):
    for item in items:
        m = item.get_closest_marker("acceptance")
        if m is None:
            continue
        n, title = m.args
        _TITLES[n] = title
        item.user_properties.append(("acceptance", n))
        _CRITERIA.setdefault(n, [])


def pytest_runtest_logreport(report):
    n = dict(report.user_properties).get("acceptance")
    if n is None:
        return
    if report.when == "call" or report.outcome != "passed":
        _CRITERIA[n].append(report.outcome)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        outcomes = _CRITERIA[n]
        if not outcomes:
            status = "NOT RUN"
        elif "failed" in outcomes:
            status = "FAIL"
        elif all(o == "skipped" for o in outcomes):
            status = "SKIP"
        else:
            status = "PASS"
        terminalreporter.write_line(f"criterion {n:2d}: {status:7s} {_TITLES[n]}")


@pytest.fixture(scope="session")
def corpus_programs():
    from mugie.fixtures import corpus

    return corpus()


@pytest.fixture(scope="session")
def listing1():
    from mugie.fixtures import build_listing1

    return build_listing1()
