"""
API гомодинной модели
"""

import numpy as np
from fastapi import APIRouter

from app.core.exceptions import DimensionMismatchError
from app.schemas.api import QCheckRequest, QCheckResponse
from app.services.homodyne import q_function_check

router = APIRouter(prefix="/homodyne", tags=["Homodyne"])


@router.post("/q-check", response_model=QCheckResponse)
def q_check(request: QCheckRequest):
    """pr_{π/2}(X_A, X_B) и Q-функция входного состояния в тех же точках"""
    if len(request.x_a) != len(request.x_b):
        raise DimensionMismatchError(len(request.x_a), len(request.x_b))
    pdf, q = q_function_check(request.model, np.array(request.x_a), np.array(request.x_b))
    pdf, q = np.atleast_1d(pdf), np.atleast_1d(q)
    return QCheckResponse(
        pdf=pdf.tolist(), q=q.tolist(), max_deviation=float(np.max(np.abs(pdf - q)))
    )
