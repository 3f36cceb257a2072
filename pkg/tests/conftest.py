import math

import pytest

from app.models.signal import GridSpec
from app.services.bapu_service import BapuService
from app.services.brushlet_service import BrushletService
from app.services.covering_service import CoveringService
from app.services.experiment_service import ExperimentService
from app.services.signal_service import SignalService


@pytest.fixture(scope="session")
def signal_service() -> SignalService:
    return SignalService()


@pytest.fixture(scope="session")
def covering_service() -> CoveringService:
    return CoveringService()


@pytest.fixture(scope="session")
def bapu_service(signal_service, covering_service) -> BapuService:
    return BapuService(signal_service, covering_service)


@pytest.fixture(scope="session")
def brushlet_service(signal_service, bapu_service) -> BrushletService:
    return BrushletService(signal_service, bapu_service)


@pytest.fixture(scope="session")
def experiment_service(signal_service, covering_service, bapu_service) -> ExperimentService:
    return ExperimentService(signal_service, covering_service, bapu_service)


@pytest.fixture(scope="session")
def grid() -> GridSpec:
    """dxi = 1/16, Nyquist radius 128."""
    return GridSpec(1, 4096, 16 * math.pi)
