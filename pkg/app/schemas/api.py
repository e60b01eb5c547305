"""
Тела запросов и ответов HTTP API
"""

from typing import List

from pydantic import BaseModel, ConfigDict, Field

from app.schemas.bell import SweepRow
from app.schemas.state import ModelSpec, StateDocument
from app.schemas.wigner import PhasePoint4, WignerAxes, WignerPlane


class TrueStateRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    model: ModelSpec = Field(default_factory=ModelSpec)
    include_detection_loss: bool = True


class StateResponse(BaseModel):
    state: StateDocument
    trace: float
    purity: float


class QCheckRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    model: ModelSpec = Field(default_factory=ModelSpec)
    x_a: List[float] = Field(min_length=1)
    x_b: List[float] = Field(min_length=1)


class QCheckResponse(BaseModel):
    pdf: List[float]
    q: List[float]
    max_deviation: float


class WignerPointRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    model: ModelSpec = Field(default_factory=ModelSpec)
    include_detection_loss: bool = True
    point: PhasePoint4 = Field(default_factory=PhasePoint4)


class WignerPointResponse(BaseModel):
    value: float


class CrossSectionRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    model: ModelSpec = Field(default_factory=ModelSpec)
    include_detection_loss: bool = True
    plane: WignerPlane
    lo: float = -3.0
    hi: float = 3.0
    step: float = Field(default=0.05, gt=0.0)


class CrossSectionResponse(BaseModel):
    axes: WignerAxes
    values: List[List[float]]


class AnalyticBellRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    model: ModelSpec = Field(default_factory=ModelSpec)
    threshold: float = Field(ge=0.0)
    delta_theta: float = 0.0


class AnalyticBellResponse(BaseModel):
    correlation: float


class BellSweepRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    model: ModelSpec = Field(default_factory=ModelSpec)
    thresholds: List[float] = Field(min_length=1)


class BellSweepResponse(BaseModel):
    rows: List[SweepRow]


class SimulateResponse(BaseModel):
    n_samples: int
    delta_theta: List[float]
    x_a: List[float]
    x_b: List[float]
