import warnings

import numpy as np
import pytest

from dtcwt_shift.experiment import ExperimentConfig, block_signal
from dtcwt_shift.signal_core import GridSpec
from dtcwt_shift.wavelet_atoms import make_gabor_pair, make_raised_cosine_pair, make_shannon_pair

H = 1 / 512


@pytest.fixture(scope="session")
def grid512():
    return GridSpec.unit_interval(512)


@pytest.fixture(scope="session")
def block(grid512):
    cfg = ExperimentConfig()
    return block_signal(grid512, cfg.signal["breakpoints"], cfg.signal["levels"])


@pytest.fixture(scope="session")
def gabor():
    return make_gabor_pair()


@pytest.fixture(scope="session")
def shannon():
    return make_shannon_pair()


@pytest.fixture(scope="session")
def raised_cosine():
    return make_raised_cosine_pair()


@pytest.fixture(scope="session")
def default_report(block, gabor):
    from dtcwt_shift.shift_metrics import shift_errors

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return shift_errors(block, gabor, (1, 6), H)


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


# one line per acceptance criterion, echoed after the run
ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])
