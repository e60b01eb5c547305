"""
Pydantic схемы модели источника и состояний
"""

import math
from typing import List

from pydantic import BaseModel, ConfigDict, Field, model_validator


class FockCutoff(BaseModel):
    """Ограничение числа фотонов в моде"""

    model_config = ConfigDict(frozen=True)

    n_max: int = Field(default=5, ge=1)

    @property
    def dim(self) -> int:
        return self.n_max + 1

    @property
    def two_mode_dim(self) -> int:
        return self.dim**2


class BeamSplitterSpec(BaseModel):
    """Амплитудные коэффициенты пропускания и отражения светоделителя"""

    model_config = ConfigDict(frozen=True)

    tau: float = Field(..., ge=0)
    rho: float = Field(..., ge=0)

    @model_validator(mode="after")
    def check_unitarity(self):
        if abs(self.tau**2 + self.rho**2 - 1.0) > 1e-12:
            raise ValueError(f"tau^2 + rho^2 = {self.tau**2 + self.rho**2} != 1")
        return self

    @classmethod
    def from_transmission(cls, tau_squared: float) -> "BeamSplitterSpec":
        return cls(tau=math.sqrt(tau_squared), rho=math.sqrt(1.0 - tau_squared))


class ModelSpec(BaseModel):
    """
    Модель эксперимента: эффективность приготовления, эффективность детектирования,
    пропускание светоделителя и усечение фоковского базиса.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    eta_prep: float = Field(default=0.64, ge=0, le=1)
    eta_det: float = Field(default=0.86, gt=0, le=1)
    tau_squared: float = Field(default=0.5, ge=0, le=1)
    n_max: int = Field(default=5, ge=1)

    @property
    def bs(self) -> BeamSplitterSpec:
        return BeamSplitterSpec.from_transmission(self.tau_squared)

    @property
    def cutoff(self) -> FockCutoff:
        return FockCutoff(n_max=self.n_max)

    @property
    def eta_eff(self) -> float:
        return self.eta_prep * self.eta_det

    def corrected(self) -> "ModelSpec":
        """Та же модель с идеальным детектором"""
        return self.model_copy(update={"eta_det": 1.0})


class StateDocument(BaseModel):
    """JSON-представление двухмодовой матрицы плотности ρ_klmn"""

    n_max: int = Field(..., ge=1)
    real: List[List[List[List[float]]]]
    imag: List[List[List[List[float]]]]
