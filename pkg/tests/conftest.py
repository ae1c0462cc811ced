import math

import numpy as np
import pytest

from boxgas import FreeEnergyModel, SimulationRegion, hard_rod, zero_potential
from boxgas.coeffs import build_table
from boxgas.oracle import tonks_log_z_source

BETA = 1.0

_model_cache = {}


def _ideal_model(side: float) -> FreeEnergyModel:
    key = ("ideal", side)
    if key not in _model_cache:
        region = SimulationRegion(1, side)
        table = build_table(zero_potential(), BETA, region, 3)
        _model_cache[key] = FreeEnergyModel(BETA, region, table)
    return _model_cache[key]


def _tonks_model(side: float, n_max: int = 5) -> FreeEnergyModel:
    key = ("tonks", side, n_max)
    if key not in _model_cache:
        region = SimulationRegion(1, side)
        z = tonks_log_z_source(region, 1.0)
        table = build_table(hard_rod(1.0), BETA, region, n_max,
                            mode="oracle-fitted", z_source=z)
        _model_cache[key] = FreeEnergyModel(BETA, region, table)
    return _model_cache[key]


@pytest.fixture(scope="session")
def ideal_model_100():
    return _ideal_model(100.0)


@pytest.fixture(scope="session")
def tonks_model_100():
    return _tonks_model(100.0)


@pytest.fixture(scope="session")
def ideal_model():
    return _ideal_model


@pytest.fixture(scope="session")
def tonks_model():
    return _tonks_model


@pytest.fixture(scope="session")
def mu_ideal():
    return math.log(0.05)


@pytest.fixture(scope="session")
def mu_tonks():
    # bulk chemical potential of hard rods at density 0.03
    from boxgas.coeffs import beta_n_infinite
    from boxgas.duality import InfiniteVolumeModel

    values = [beta_n_infinite(hard_rod(1.0), BETA, n)[0] for n in (1, 2)]
    return InfiniteVolumeModel(BETA, np.array(values)).mu_of_rho(0.03)
