"""
Shared fixtures for the pnlsep test suite.
"""

import logging

import numpy as np
import pytest

from pnlsep.main import configure_logging
from pnlsep.models.nonlinearity import Cubic, MonotonePWL
from pnlsep.models.pnl import PnlModel, Separator
from pnlsep.models.signals import MixingMatrix, SignalBlock, SignalRole


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def mixing():
    return MixingMatrix(np.array([[1.0, 0.5], [0.5, 1.0]]))


@pytest.fixture
def cubic_model(mixing):
    return PnlModel(mixing=mixing, distortions=(Cubic(c=0.3), Cubic(c=0.3)))


@pytest.fixture
def uniform_sources(rng):
    return SignalBlock(rng.uniform(-np.sqrt(3.0), np.sqrt(3.0), size=(2, 2000)), SignalRole.SOURCE)


@pytest.fixture
def gaussian_observations(rng):
    return SignalBlock(rng.standard_normal((2, 10000)), SignalRole.OBSERVATION)


@pytest.fixture
def pwl_separator():
    """Two-channel separator with non-trivial piecewise-linear compensators."""
    knots = np.linspace(-4.0, 4.0, 9)
    return Separator(
        compensators=(
            MonotonePWL(knots=knots, values=np.tanh(knots / 3.0) * 3.0 + 0.1 * knots),
            MonotonePWL(knots=knots + 0.05, values=knots + 0.05 * knots ** 3),
        ),
        unmixing=MixingMatrix(np.array([[1.1, -0.3], [0.2, 0.9]])),
    )


@pytest.fixture(autouse=True, scope="session")
def quiet_logging():
    configure_logging(logging.WARNING)
