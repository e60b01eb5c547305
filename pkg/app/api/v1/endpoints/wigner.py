"""
API функции Вигнера
"""

from fastapi import APIRouter

from app.core.config import settings
from app.core.exceptions import ParameterError
from app.schemas.api import (
    CrossSectionRequest,
    CrossSectionResponse,
    WignerPointRequest,
    WignerPointResponse,
)
from app.schemas.wigner import GridSpec, PhasePoint4
from app.services.fock import make_true_state
from app.services.wigner import cross_section, two_mode_wigner

router = APIRouter(prefix="/wigner", tags=["Wigner"])


@router.post("/point", response_model=WignerPointResponse)
def wigner_point(request: WignerPointRequest):
    state = make_true_state(request.model, request.include_detection_loss)
    return WignerPointResponse(value=two_mode_wigner(state, request.point))


@router.post("/cross-section", response_model=CrossSectionResponse)
def wigner_cross_section(request: CrossSectionRequest):
    """Сетка W в одном из сечений (размер ограничен MAX_API_GRID_POINTS)"""
    spec = GridSpec(plane=request.plane, lo=request.lo, hi=request.hi, step=request.step)
    if spec.n_points**2 > settings.MAX_API_GRID_POINTS:
        raise ParameterError(
            "step", request.step, f"не более {settings.MAX_API_GRID_POINTS} точек сетки"
        )
    state = make_true_state(request.model, request.include_detection_loss)
    grid = cross_section(state, spec)
    origin = two_mode_wigner(state, PhasePoint4())
    return CrossSectionResponse(axes=grid.axes(origin), values=grid.values.tolist())
