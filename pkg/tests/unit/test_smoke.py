import pytest

from app.core.config import settings
from app.main import app, health


@pytest.mark.asyncio
async def test_health_endpoint():
    assert await health() == {"status": "healthy"}


def test_routes_registered():
    paths = {route.path for route in app.routes}
    for suffix in ("/states/true", "/wigner/point", "/bell/analytic", "/simulate"):
        assert f"{settings.API_V1_STR}{suffix}" in paths


def test_default_settings():
    assert settings.DEFAULT_SEED >= 0
    assert settings.SAMPLER_SHARD_SIZE > 0
