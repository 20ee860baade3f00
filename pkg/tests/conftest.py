import numpy as np
import pytest

from unified_descent import generate_halfspace_dataset, make_halfspace_problem

# criterion label -> list of test outcomes, filled while test_acceptance runs
_ACCEPTANCE: dict[str, list[bool]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(label): acceptance criterion this test implements")


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    label = getattr(report, "criterion_label", None)
    if label is not None:
        _ACCEPTANCE.setdefault(label, []).append(report.outcome == "passed")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    m = item.get_closest_marker("criterion")
    if m is not None:
        rep.criterion_label = m.args[0]


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for label in sorted(_ACCEPTANCE, key=lambda s: int(s.split(".")[0])):
        res = _ACCEPTANCE[label]
        ok = all(res)
        tr.write_line(f"{'PASS' if ok else 'FAIL'}  {label}  ({sum(res)}/{len(res)} tests)")


@pytest.fixture(scope="session")
def halfspace():
    return make_halfspace_problem(generate_halfspace_dataset())


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
