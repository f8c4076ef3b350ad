import pytest

from moralgate.config import (CANONICAL_RULES, DEFAULT_CORPUS, DEFAULT_SCRIPT, ENVIRONMENTAL_CORPUS,
                              ENVIRONMENTAL_SCRIPT, LISTING1_RULES, RunConfig)
from moralgate.corpus import load_corpus
from moralgate.pipeline import Deps
from moralgate.provider import mock_from_script
from moralgate.rulebase import load_rules
from moralgate.tagger import TaggerConfig

_acceptance = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, title): acceptance criterion")


def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("acceptance")
    if marker is None or call.when != "call":
        return
    number, title = marker.args
    passed = call.excinfo is None
    if call.excinfo is not None and call.excinfo.errisinstance(pytest.xfail.Exception):
        passed = None
    prev = _acceptance.get(number, (title, True))[1]
    _acceptance[number] = (title, passed if prev is True else prev)


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_acceptance):
        title, passed = _acceptance[number]
        status = {True: "PASS", False: "FAIL", None: "SOFT-MISS"}[passed]
        terminalreporter.write_line(f"AC{number:<3} {status:<9} {title}")


@pytest.fixture(scope="session")
def canonical():
    return load_rules(CANONICAL_RULES, name="canonical")


@pytest.fixture(scope="session")
def listing1():
    return load_rules(LISTING1_RULES, name="listing1")


@pytest.fixture(scope="session")
def default_corpus():
    return load_corpus(DEFAULT_CORPUS, default_shape=True)


@pytest.fixture(scope="session")
def env_corpus():
    return load_corpus(ENVIRONMENTAL_CORPUS)


@pytest.fixture(scope="session")
def default_provider():
    return mock_from_script(DEFAULT_SCRIPT)


@pytest.fixture(scope="session")
def env_provider():
    return mock_from_script(ENVIRONMENTAL_SCRIPT)


@pytest.fixture(scope="session")
def deps(canonical, default_provider):
    return Deps(canonical, default_provider, TaggerConfig())


@pytest.fixture
def run_cfg(tmp_path):
    return RunConfig(output_dir=str(tmp_path / "out"))
