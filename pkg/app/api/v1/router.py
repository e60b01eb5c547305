"""
Главный роутер API v1
"""

from fastapi import APIRouter

from app.api.v1.endpoints.bell import router as bell_router
from app.api.v1.endpoints.homodyne import router as homodyne_router
from app.api.v1.endpoints.simulate import router as simulate_router
from app.api.v1.endpoints.states import router as states_router
from app.api.v1.endpoints.wigner import router as wigner_router

api_router = APIRouter()

api_router.include_router(states_router)
api_router.include_router(homodyne_router)
api_router.include_router(wigner_router)
api_router.include_router(bell_router)
api_router.include_router(simulate_router)
