"""
API синтетического прогона
"""

from fastapi import APIRouter

from app.core.config import settings
from app.core.exceptions import ParameterError
from app.schemas.api import SimulateResponse
from app.schemas.run import RunConfig
from app.services.sampler import sample_run

router = APIRouter(prefix="/simulate", tags=["Simulate"])


@router.post("", response_model=SimulateResponse)
def simulate(config: RunConfig):
    if config.n_samples > settings.MAX_API_SAMPLES:
        raise ParameterError(
            "n_samples", config.n_samples, f"<= {settings.MAX_API_SAMPLES} через API"
        )
    samples = sample_run(config)
    return SimulateResponse(
        n_samples=len(samples),
        delta_theta=samples.delta_theta.tolist(),
        x_a=samples.x_a.tolist(),
        x_b=samples.x_b.tolist(),
    )
