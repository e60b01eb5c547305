"""
Конфигурация полного конвейера simulate -> reconstruct -> wigner -> bell
"""

from typing import Any, Dict, List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from app.core.config import settings
from app.schemas.bell import BellConfig
from app.schemas.recon import ReconConfig
from app.schemas.run import RunConfig
from app.schemas.state import ModelSpec
from app.schemas.wigner import WignerPlane


def _default_thresholds() -> List[float]:
    return [round(0.1 * i, 10) for i in range(13)]


def _default_histogram_edges() -> List[float]:
    return [float(v) for v in np.linspace(-4.0, 4.0, 41)]


class PipelineConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    model: ModelSpec = Field(default_factory=ModelSpec)
    run: RunConfig = Field(default_factory=RunConfig)
    recon: ReconConfig = Field(default_factory=ReconConfig)
    bell: BellConfig = Field(default_factory=BellConfig)
    bell_thresholds: List[float] = Field(default_factory=_default_thresholds)
    wigner_planes: List[WignerPlane] = Field(default_factory=lambda: list(WignerPlane))
    wigner_lo: float = -3.0
    wigner_hi: float = 3.0
    wigner_step: float = Field(default=0.05, gt=0.0)
    # несколько светоделителей за один запуск; None - только model.tau_squared
    tau_squared: Optional[List[float]] = None
    vacuum_samples: int = Field(default=100_000, ge=2)
    histogram_edges: List[float] = Field(default_factory=_default_histogram_edges)
    output_dir: str = Field(default_factory=lambda: settings.OUTPUT_DIR)

    @field_validator("bell_thresholds")
    @classmethod
    def non_negative(cls, v: List[float]) -> List[float]:
        if any(t < 0 for t in v):
            raise ValueError("пороги должны быть >= 0")
        return v

    @field_validator("tau_squared")
    @classmethod
    def transmissions(cls, v: Optional[List[float]]) -> Optional[List[float]]:
        if v is not None and (not v or any(not 0.0 <= t <= 1.0 for t in v)):
            raise ValueError("tau_squared: непустой список значений из [0, 1]")
        return v

    @model_validator(mode="after")
    def sync_sections(self):
        if "model" in self.run.model_fields_set and self.run.model != self.model:
            raise ValueError("run.model расходится с model; задайте модель один раз")
        if self.recon.n_max != self.model.n_max:
            raise ValueError("recon.n_max должен совпадать с model.n_max")
        self.run = self.run.model_copy(update={"model": self.model})
        return self

    @property
    def transmissions_list(self) -> List[float]:
        return list(self.tau_squared) if self.tau_squared else [self.model.tau_squared]

    def with_overrides(self, **overrides: Any) -> "PipelineConfig":
        """Флаги командной строки поверх конфигурации (None игнорируется)"""
        data: Dict[str, Any] = self.model_dump()
        for path, value in overrides.items():
            if value is None:
                continue
            node = data
            *parents, leaf = path.split(".")
            for key in parents:
                node = node[key]
            node[leaf] = value
        data["run"].pop("model", None)
        return PipelineConfig.model_validate(data)


class StageReport(BaseModel):
    name: str
    ok: bool
    details: Dict[str, Any] = Field(default_factory=dict)


class PipelineReport(BaseModel):
    tau_squared: float
    output_dir: str
    stages: List[StageReport] = Field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(s.ok for s in self.stages)
