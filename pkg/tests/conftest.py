import numpy as np
import pytest

from stencil_fabric.config import get_settings
from stencil_fabric.models import DType, Grid3, GridGenerator
from stencil_fabric.services.fabric_service import default_versal_fabric
from stencil_fabric.utils.helpers import generate_grid


@pytest.fixture(autouse=True)
def isolated_settings(tmp_path, monkeypatch):
    """Keep every test away from the developer's .env and log directory."""
    monkeypatch.chdir(tmp_path)
    for name in ("FABRIC_FILE", "PLATFORMS_FILE", "SWEEP_WORKERS", "DEFAULT_DIMS", "DEFAULT_SEED"):
        monkeypatch.delenv(f"STENCIL_FABRIC_{name}", raising=False)
    monkeypatch.setenv("STENCIL_FABRIC_LOG_TO_FILE", "false")
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


@pytest.fixture
def fabric():
    return default_versal_fabric()


@pytest.fixture
def random_grid():
    def make(dims, dtype=DType.I32, seed=42):
        return generate_grid(GridGenerator.RANDOM, dims, dtype, seed=seed)

    return make


@pytest.fixture
def impulse_7x7():
    data = np.zeros((1, 7, 7), dtype=np.int32)
    data[0, 3, 3] = 1
    return Grid3.from_array(data)
