import numpy as np
import pytest

from framedrop.datasets import SynthConfig, synth_corpus
from framedrop.rng import SplitMix64

# tests marked @pytest.mark.criterion("...") report one pass/fail line per
# acceptance criterion in the terminal summary
_CRITERIA: dict[str, bool] = {}


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "criterion(name): acceptance criterion this test implements"
    )


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    if report.when != "call":
        return
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    name = marker.args[0]
    _CRITERIA[name] = _CRITERIA.get(name, True) and report.passed


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed in _CRITERIA.items():
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}: {name}")


@pytest.fixture(scope="session")
def mini_corpus(tmp_path_factory):
    """Small deterministic corpus shared by dataset/experiment tests."""
    out = tmp_path_factory.mktemp("corpus")
    config = SynthConfig(n_train=2, n_validation=1, n_test=2, seconds=20.0)
    return synth_corpus(config, SplitMix64(1234), out)


@pytest.fixture
def rand():
    return np.random.RandomState(20240817)
