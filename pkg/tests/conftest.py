import numpy as np
import pytest

from scenariolab.dataset import make_folds
from scenariolab.sim import simulate_campaign

CAMPAIGN_SEED = 42


@pytest.fixture(scope="session")
def campaign():
    return simulate_campaign(CAMPAIGN_SEED)


@pytest.fixture(scope="session")
def foldplan(campaign):
    return make_folds(campaign, 10, np.random.default_rng(CAMPAIGN_SEED))


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
