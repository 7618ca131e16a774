import logging

import numpy as np
import pytest

from classes.platform_params import PlatformParams
from classes.sim_config import SimConfig
from config import Config, load_config


@pytest.fixture
def params() -> PlatformParams:
    return PlatformParams()


@pytest.fixture
def config() -> Config:
    return load_config()


@pytest.fixture
def quiet_sim() -> SimConfig:
    """Simulation settings without sensor noise."""
    return SimConfig(noise_position=0.0, noise_attitude=0.0, noise_rate=0.0)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture(autouse=True)
def _log_level(caplog: pytest.LogCaptureFixture) -> None:
    caplog.set_level(logging.INFO)
