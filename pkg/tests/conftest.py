import numpy as np
import pytest

from rdic.corpus import synthetic_corpus

_ACCEPTANCE = []


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        number, title = marker.args
        _ACCEPTANCE.append((number, title, report.outcome.upper()))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, outcome in sorted(_ACCEPTANCE):
        verdict = "PASS" if outcome == "PASSED" else outcome
        terminalreporter.write_line(f"[{verdict}] criterion {number:>2}: {title}")


@pytest.fixture(scope="session")
def corpus():
    return synthetic_corpus()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
