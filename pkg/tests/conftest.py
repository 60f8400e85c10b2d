import numpy as np
import pytest

from stainbench import synthetic

# Acceptance outcomes, filled by tests/test_acceptance.py and echoed at the end of the run.
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])


@pytest.fixture(scope="session")
def he_tiles():
    return synthetic.synthetic_corpus(6, seed=11, size=96)


@pytest.fixture(scope="session")
def mt_tiles():
    return synthetic.synthetic_corpus(6, seed=12, size=96, stains=synthetic.MT_STAINS)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
