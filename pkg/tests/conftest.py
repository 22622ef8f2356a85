"""Shared fixtures and the acceptance-criteria terminal summary."""

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from exdr.backends import FixtureBackend
from exdr.confidence import SupportLexicons


@pytest.fixture
def fixture_backend():
    return FixtureBackend()


def populate_reference_sentences(backend: FixtureBackend,
                                 lexicons: SupportLexicons,
                                 real_vec=(1.0, 0.0), fake_vec=(0.0, 1.0)) -> None:
    """Give every reference sentence of both lexicon groups a stored vector."""
    for word in lexicons.real_words:
        backend.set_sentence_vector(lexicons.real_template.format(word), list(real_vec))
    for word in lexicons.fake_words:
        backend.set_sentence_vector(lexicons.fake_template.format(word), list(fake_vec))


# -- acceptance reporting ------------------------------------------------------

_ACCEPTANCE_RESULTS = {}


def record_acceptance(criterion: str, nodeid: str, passed: bool) -> None:
    _ACCEPTANCE_RESULTS.setdefault(criterion, []).append((nodeid, passed))


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    if report.when != "call":
        return
    marker = item.get_closest_marker("acceptance")
    if marker is not None:
        criterion = marker.kwargs.get("criterion") or marker.args[0]
        record_acceptance(criterion, item.nodeid, report.passed)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    def sort_key(name):
        head = name.split(":")[0]
        return (0, int(head)) if head.isdigit() else (1, 0)
    for criterion in sorted(_ACCEPTANCE_RESULTS, key=sort_key):
        results = _ACCEPTANCE_RESULTS[criterion]
        ok = all(passed for _, passed in results)
        status = "PASS" if ok else "FAIL"
        terminalreporter.write_line(f"[{status}] criterion {criterion}")


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "acceptance(criterion): ties a test to one acceptance criterion"
    )
