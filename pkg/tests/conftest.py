import numpy as np
import pytest

from handshape import synth


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def templates():
    return synth.make_templates()


_RESULTS = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_RESULTS] = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None or (report.when != "call" and report.passed):
        return
    detail = "; ".join(f"{k}={v}" for k, v in item.user_properties)
    item.config.stash[_RESULTS].append((marker.kwargs["criterion"], marker.kwargs["title"], report.outcome, detail))


def pytest_terminal_summary(terminalreporter, config):
    rows = sorted(config.stash.get(_RESULTS, []), key=lambda r: r[0])
    if not rows:
        return
    terminalreporter.section("acceptance criteria")
    for criterion, title, outcome, detail in rows:
        verdict = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"criterion {criterion}: {verdict}  {title}" + (f"  [{detail}]" if detail else ""))
