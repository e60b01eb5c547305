"""
Dual-rail homodyne tomography API
"""

from contextlib import asynccontextmanager

from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware

from app.api.v1.router import api_router
from app.core.config import settings
from app.core.exceptions import register_exception_handlers
from app.core.logging import setup_logging


@asynccontextmanager
async def lifespan(app: FastAPI):
    """Lifecycle: startup и shutdown"""
    setup_logging()
    yield


app = FastAPI(
    title=settings.PROJECT_NAME,
    description="Моделирование гомодинной томографии однофотонного дуального кубита",
    version="1.0.0",
    docs_url="/docs",
    redoc_url="/redoc",
    lifespan=lifespan,
)

register_exception_handlers(app)

app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)


@app.get("/health", tags=["Health"])
async def health():
    """Проверка здоровья"""
    return {"status": "healthy"}


app.include_router(api_router, prefix=settings.API_V1_STR)
