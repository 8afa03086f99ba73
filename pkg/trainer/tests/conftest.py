from __future__ import annotations

import json

import pytest

from corpusgen import separable_corpus, text_vocabulary
from crowdtrainer import build_tiny_checkpoint

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
    terminalreporter.section("acceptance criteria (trainer)")
    for (n, label), outcome in sorted(_acceptance_results.items()):
        verdict = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"criterion {n} ({label}): {verdict}")


@pytest.fixture(scope="session")
def tiny_ckpt_t1(tmp_path_factory):
    out = tmp_path_factory.mktemp("ckpt") / "tiny-t1"
    return build_tiny_checkpoint(out, num_labels=2, seed=11,
                                 extra_tokens=text_vocabulary())


@pytest.fixture(scope="session")
def tiny_ckpt_t2(tmp_path_factory):
    out = tmp_path_factory.mktemp("ckpt") / "tiny-t2"
    return build_tiny_checkpoint(out, num_labels=4, seed=11,
                                 extra_tokens=text_vocabulary())


@pytest.fixture(scope="session")
def corpora(tmp_path_factory):
    """Separable synthetic train/dev corpus files, 50 + 16 instances."""
    root = tmp_path_factory.mktemp("corpora")
    paths = {
        "train": root / "train.json",
        "dev": root / "dev.json",
    }
    paths["train"].write_text(
        json.dumps(separable_corpus(50, seed=3, id_base=10_000)), "utf-8"
    )
    paths["dev"].write_text(
        json.dumps(separable_corpus(16, seed=4, id_base=20_000, split="DEV")),
        "utf-8",
    )
    return {k: str(v) for k, v in paths.items()}
