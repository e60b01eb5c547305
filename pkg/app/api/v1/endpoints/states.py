"""
API модели состояния
"""

from fastapi import APIRouter

from app.schemas.api import StateResponse, TrueStateRequest
from app.services.fock import make_true_state, purity

router = APIRouter(prefix="/states", tags=["States"])


@router.post("/true", response_model=StateResponse)
def true_state(request: TrueStateRequest):
    """U (ρ_in ⊗ |0><0|) U† для заданной модели"""
    state = make_true_state(request.model, request.include_detection_loss).check()
    return StateResponse(state=state.to_document(), trace=state.trace(), purity=purity(state))
