"""
Pydantic схемы гомодинного измерения
"""

import math

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

TWO_PI = 2.0 * math.pi


def wrap_phase(value: float) -> float:
    wrapped = math.fmod(value, TWO_PI)
    if wrapped < 0:
        wrapped += TWO_PI
    # fmod(-1e-18) + 2π округляется до 2π
    return 0.0 if wrapped >= TWO_PI else wrapped


class PhaseSetting(BaseModel):
    """Относительная фаза δθ = θ_A - θ_B, хранится в [0, 2π)"""

    model_config = ConfigDict(frozen=True)

    delta_theta: float = 0.0

    @field_validator("delta_theta")
    @classmethod
    def wrap(cls, v: float) -> float:
        if not math.isfinite(v):
            raise ValueError("delta_theta должна быть конечной")
        return wrap_phase(v)


class QuadBin(BaseModel):
    """Интервал квадратуры в единицах дробового шума (дисперсия вакуума 1/2)"""

    model_config = ConfigDict(frozen=True)

    lo: float = Field(...)
    hi: float = Field(...)

    @model_validator(mode="after")
    def check_order(self):
        if math.isnan(self.lo) or math.isnan(self.hi) or not self.lo < self.hi:
            raise ValueError(f"Требуется lo < hi, получено ({self.lo}, {self.hi})")
        return self

    @classmethod
    def whole_line(cls) -> "QuadBin":
        return cls(lo=-math.inf, hi=math.inf)
