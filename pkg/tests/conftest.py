from __future__ import annotations

from pathlib import Path

import pytest

from pipta.cli import load

CORPUS = Path(__file__).resolve().parent.parent / "corpus"


def corpus_file(name: str):
    return load(CORPUS / name)


@pytest.fixture
def corpus_dir() -> Path:
    return CORPUS


# acceptance criteria: one pass/fail line each in the terminal summary ----------

ACCEPTANCE: dict[int, tuple[bool, str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or rep.skipped:
        return
    number, title = marker.args
    if rep.when == "call" or rep.failed:
        detail = getattr(item, "detail", "")
        ACCEPTANCE[number] = (rep.passed and ACCEPTANCE.get(number, (True,))[0], title, detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        ok, title, detail = ACCEPTANCE[number]
        line = f"criterion {number:2d} {'PASS' if ok else 'FAIL'}: {title}"
        terminalreporter.write_line(line + (f" [{detail}]" if detail else ""))
