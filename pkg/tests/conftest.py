import numpy as np
import pytest

from hyperdecay import (
    FrequencyGrid,
    ModelParamsI,
    ModelParamsII,
    build_model_one,
    build_model_two,
)


@pytest.fixture(scope="session")
def grid121():
    return FrequencyGrid.log(1e-3, 1e3, 121)


@pytest.fixture(scope="session")
def grid241():
    return FrequencyGrid.log(1e-3, 1e3, 241)


@pytest.fixture(scope="session")
def model1_m6():
    return build_model_one(ModelParamsI(m=6))


@pytest.fixture(scope="session")
def model1_m8():
    return build_model_one(ModelParamsI(m=8))


@pytest.fixture(scope="session")
def model2_m6():
    return build_model_two(ModelParamsII(m=6))


@pytest.fixture(scope="session")
def model2_m8():
    return build_model_two(ModelParamsII(m=8))


def generic_params_one(m: int) -> ModelParamsI:
    """Nonunit couplings so no accidental cancellations hide indexing bugs."""
    a = {j: 1.0 + 0.15 * (j - 3) * (-1) ** j for j in range(4, m + 1)}
    return ModelParamsI(m=m, gamma=1.7, a=a)


def generic_params_two(m: int) -> ModelParamsII:
    a = {j: 1.0 + 0.2 * (j - 3) * (-1) ** j for j in range(4, m + 1)}
    return ModelParamsII(m=m, gamma=1.3, a=a)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(42)
