import logging

import numpy as np
import pytest

from leapdrive.sim import load_scenario, straight_road


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def straight():
    return load_scenario(straight_road())


@pytest.fixture(autouse=True)
def _quiet_logs(caplog):
    caplog.set_level(logging.WARNING)
