"""
Pydantic схемы запуска синтетического эксперимента
"""

import math
from enum import Enum
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.core.config import settings
from app.schemas.homodyne import wrap_phase
from app.schemas.state import ModelSpec


class PhaseSchedule(str, Enum):
    """Как меняется δθ в течение прогона"""

    SWEEP = "sweep"
    UNIFORM = "uniform"
    FIXED = "fixed"


class RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    model: ModelSpec = Field(default_factory=ModelSpec)
    n_samples: int = Field(default=200_000, ge=1)
    phase_schedule: PhaseSchedule = PhaseSchedule.SWEEP
    fixed_delta_theta: Optional[float] = None
    rng_seed: int = Field(default_factory=lambda: settings.DEFAULT_SEED, ge=0, lt=2**64)

    @model_validator(mode="after")
    def check_schedule(self):
        if self.phase_schedule == PhaseSchedule.FIXED:
            if self.fixed_delta_theta is None or not math.isfinite(self.fixed_delta_theta):
                raise ValueError("fixed_delta_theta обязателен для phase_schedule='fixed'")
            self.fixed_delta_theta = wrap_phase(self.fixed_delta_theta)
        return self


class SampleManifest(BaseModel):
    """Сопроводительный файл выборки"""

    seed: int
    model: ModelSpec
    n_samples: int
    phase_schedule: PhaseSchedule
    fixed_delta_theta: Optional[float] = None
    samples_file: str
    created_at: str
