import pytest

from skewheat import MediumParams
from skewheat.solver import ExactLinearSampler

# One fixed seed for every Monte Carlo test: margins are bit-reproducible.
MC_SEED = 20250601
M14 = MediumParams(1, 4, 1, 1)


@pytest.fixture(scope="session")
def exact_sampler_64():
    return ExactLinearSampler(M14, 0.5, 1.0, 64)


@pytest.fixture(scope="session")
def exact_sampler_256():
    return ExactLinearSampler(M14, 0.5, 1.0, 256)


@pytest.fixture(scope="session")
def exact_sampler_1024():
    return ExactLinearSampler(M14, 0.5, 1.0, 1024)
