import numpy as np
import pytest

from phbound.bcspec import LinearM
from phbound.config import config
from phbound.phs import PhsSystem, split_system


@pytest.fixture(autouse=True)
def fixture_reset_config():
    config.reset()
    yield
    config.reset()


@pytest.fixture(name="transport")
def fixture_transport() -> PhsSystem:
    return PhsSystem.transport((0.0, 1.0))


@pytest.fixture(name="transport_qs")
def fixture_transport_qs(transport):
    return split_system(transport)


@pytest.fixture(name="beam")
def fixture_beam() -> PhsSystem:
    return PhsSystem.beam((0.0, 1.0))


@pytest.fixture(name="inflow")
def fixture_inflow():
    """Transport boundary condition ``u(a) = alpha u(b)``."""

    def _inflow(alpha: float) -> LinearM:
        return LinearM(np.array([[alpha]]))

    return _inflow
