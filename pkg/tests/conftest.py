"""
Pytest fixtures for pytest-asyncio 0.24+
"""

from typing import AsyncGenerator

import pytest
import pytest_asyncio
from httpx import ASGITransport, AsyncClient

from app.core.config import settings
from app.main import app
from app.schemas.state import FockCutoff, ModelSpec


@pytest.fixture(autouse=True)
def povm_cache_dir(tmp_path, monkeypatch):
    """Keep the POVM cache inside the test's temporary directory."""
    cache = tmp_path / "povm_cache"
    monkeypatch.setattr(settings, "POVM_CACHE_DIR", str(cache))
    return cache


@pytest.fixture
def cutoff() -> FockCutoff:
    return FockCutoff(n_max=5)


@pytest.fixture
def experiment_model() -> ModelSpec:
    """η=0.64, η_det=0.86, τ²=0.5."""
    return ModelSpec(eta_prep=0.64, eta_det=0.86, tau_squared=0.5, n_max=5)


@pytest.fixture
def ideal_model() -> ModelSpec:
    return ModelSpec(eta_prep=1.0, eta_det=1.0, tau_squared=0.5, n_max=5)


@pytest.fixture
def vacuum_model() -> ModelSpec:
    return ModelSpec(eta_prep=0.0, eta_det=1.0, tau_squared=0.5, n_max=5)


@pytest_asyncio.fixture
async def client() -> AsyncGenerator[AsyncClient, None]:
    """Create test client bound to the ASGI app."""
    async with AsyncClient(transport=ASGITransport(app=app), base_url="http://test") as ac:
        yield ac
