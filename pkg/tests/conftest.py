from __future__ import annotations

from pathlib import Path

import pytest

from crowdeval.corpus import load_corpus

DATA = Path(__file__).parent / "data"

_acceptance_results: dict[tuple[int, str], str] = {}


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "acceptance(n, label): toolkit acceptance criterion"
    )


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker and report.when == "call":
        key = (marker.kwargs["n"], marker.kwargs["label"])
        _acceptance_results[key] = report.outcome


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _acceptance_results:
        return
    terminalreporter.section("acceptance criteria")
    for (n, label), outcome in sorted(_acceptance_results.items()):
        verdict = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"criterion {n} ({label}): {verdict}")


@pytest.fixture(scope="session")
def data_dir() -> Path:
    return DATA


@pytest.fixture(scope="session")
def golden_corpus():
    return load_corpus(DATA / "corpus.json")
