"""
Pydantic схемы реконструкции методом максимального правдоподобия
"""

from typing import List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from app.schemas.state import StateDocument


def _default_quad_edges() -> List[float]:
    return [float(v) for v in np.linspace(-5.0, 5.0, 41)]


class ReconConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    n_max: int = Field(default=5, ge=1)
    eta_det: float = Field(default=0.86, gt=0.0, le=1.0)
    n_phase_bins: int = Field(default=12, ge=1)
    quad_edges: List[float] = Field(default_factory=_default_quad_edges, min_length=1)
    max_iterations: int = Field(default=2000, ge=1)
    tol: float = Field(default=1e-9, gt=0.0)
    bin_averaged: bool = True

    @field_validator("quad_edges")
    @classmethod
    def strictly_increasing(cls, v: List[float]) -> List[float]:
        arr = np.asarray(v, dtype=np.float64)
        if not np.all(np.isfinite(arr)):
            raise ValueError("границы бинов должны быть конечными")
        if np.any(np.diff(arr) <= 0):
            raise ValueError("границы бинов должны строго возрастать")
        return v


class ReconDiagnostics(BaseModel):
    iterations: int
    converged: bool
    log_likelihood: float
    deltas: List[float] = Field(default_factory=list)
    dilution_steps: int = 0
    min_dilution: Optional[float] = None
    total_counts: float


class EfficiencyFit(BaseModel):
    """η̂ = 1 - ρ_0000, τ̂² = ρ_1010 / η̂ и невязка подгонки смесью"""

    eta: float
    tau_squared: float
    residual: float


class ReconResult(BaseModel):
    """JSON документ результата реконструкции"""

    state: StateDocument
    diagnostics: ReconDiagnostics
    efficiency: EfficiencyFit
    config: ReconConfig
    fidelity: Optional[float] = None
