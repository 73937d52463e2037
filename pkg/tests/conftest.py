"""Shared, session-scoped fixtures: the expensive level solves run once per test session."""
from pathlib import Path

import pytest

from surfdecay.config import RunConfig
from surfdecay.physical_model import CESIUM_D2, silica_cesium_potentials
from surfdecay.pipeline import Pipeline
from surfdecay.rates import RateQuadrature

ROOT = Path(__file__).resolve().parents[1]
SHIPPED_CONFIG = ROOT / "configs" / "silica_cesium.toml"


@pytest.fixture(scope="session")
def atom():
    return CESIUM_D2


@pytest.fixture(scope="session")
def potentials():
    return silica_cesium_potentials()


@pytest.fixture(scope="session")
def quad():
    return RateQuadrature.build(1.45)


@pytest.fixture(scope="session")
def config():
    return RunConfig.from_file(SHIPPED_CONFIG)


@pytest.fixture(scope="session")
def pipeline(config):
    return Pipeline(config)


@pytest.fixture(scope="session")
def window_excited(pipeline):
    return list(pipeline.window_excited)


@pytest.fixture(scope="session")
def window_ground(pipeline):
    return list(pipeline.window_ground)


@pytest.fixture(scope="session")
def shallow_ground(pipeline):
    return pipeline.shallow_ground


@pytest.fixture(scope="session")
def deep_excited(pipeline):
    return pipeline.deep_excited


@pytest.fixture(scope="session")
def deep_ground(pipeline):
    return pipeline.deep_ground
