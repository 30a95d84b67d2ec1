from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from datawalls import data_path  # noqa: E402
from datawalls.store.policy_io import read_document, read_policy  # noqa: E402
from datawalls.store.state import EngineState  # noqa: E402

GOLDEN = Path(__file__).parent / "golden"

_acceptance: dict[int, tuple[str, str]] = {}


@pytest.fixture(scope="session")
def case_policy():
    return read_policy(data_path("case_study.yaml"))


@pytest.fixture(scope="session")
def case_document():
    return read_document(data_path("case_study.yaml"))


@pytest.fixture
def case_state(case_policy):
    return EngineState.initial(case_policy)


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.failed):
        return
    info = dict(report.user_properties).get("criterion")
    if info is None:
        return
    number, title = info
    previous = _acceptance.get(number, (title, "PASS"))[1]
    _acceptance[number] = (title, "PASS" if report.passed and previous == "PASS" else "FAIL")


def pytest_collection_modifyitems(items):
    for item in items:
        m = item.get_closest_marker("criterion")
        if m is not None:
            item.user_properties.append(("criterion", tuple(m.args)))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_acceptance):
        title, verdict = _acceptance[number]
        terminalreporter.write_line(f"[{verdict}] criterion {number}: {title}")
