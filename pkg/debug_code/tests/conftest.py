import numpy as np
import pytest

from models.distributions import BivariateLognormalSpec
from models.xos import XosStructure
from services.default_risk_service import MonteCarloPdEstimator


def random_structures(rng: np.random.Generator, count: int, max_fraction: float = 0.99):
    """Structures over every recognised fraction pattern, with random face values."""
    structures = []
    patterns = [
        (1, 1, 0, 0), (0, 0, 1, 1), (1, 1, 1, 1), (0, 0, 0, 0),
        (1, 1, 1, 0), (1, 0, 1, 1), (1, 0, 0, 1), (0, 1, 1, 0),
    ]
    for i in range(count):
        pattern = patterns[i % len(patterns)]
        fractions = rng.uniform(0.01, max_fraction, size=4) * np.array(pattern)
        d1, d2 = rng.uniform(0.1, 5.0, size=2)
        structures.append(XosStructure(*fractions.tolist(), d1=float(d1), d2=float(d2)))
    return structures


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def standard_spec():
    """Independent assets with expected value 1 and log-variance 1."""
    return BivariateLognormalSpec.from_asset_level(1.0, 1.0)


@pytest.fixture
def equity_half():
    return XosStructure.equity_only(0.5, 0.5, 1.0, 1.0)


@pytest.fixture
def debt_half():
    return XosStructure.debt_only(0.5, 0.5, 1.0, 1.0)


@pytest.fixture
def estimator():
    return MonteCarloPdEstimator()
