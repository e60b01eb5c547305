"""
API аналитических корреляций
"""

from fastapi import APIRouter

from app.schemas.api import (
    AnalyticBellRequest,
    AnalyticBellResponse,
    BellSweepRequest,
    BellSweepResponse,
)
from app.services.bell import analytic_correlation, threshold_sweep

router = APIRouter(prefix="/bell", tags=["Bell"])


@router.post("/analytic", response_model=AnalyticBellResponse)
def analytic(request: AnalyticBellRequest):
    value = analytic_correlation(request.model, request.threshold, request.delta_theta)
    return AnalyticBellResponse(correlation=value)


@router.post("/sweep", response_model=BellSweepResponse)
def sweep(request: BellSweepRequest):
    """Амплитуда и доля отобранных событий для списка порогов"""
    return BellSweepResponse(rows=threshold_sweep(request.model, request.thresholds))
