"""
Pydantic схемы фазового пространства
"""

import math
from enum import Enum
from typing import Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

COORDINATES = ("x_a", "p_a", "x_b", "p_b")


class PhasePoint4(BaseModel):
    model_config = ConfigDict(frozen=True)

    x_a: float = 0.0
    p_a: float = 0.0
    x_b: float = 0.0
    p_b: float = 0.0

    @field_validator("x_a", "p_a", "x_b", "p_b")
    @classmethod
    def finite(cls, v: float) -> float:
        if not math.isfinite(v):
            raise ValueError("координата должна быть конечной")
        return v


class WignerPlane(str, Enum):
    """Сечения четырёхмерной функции Вигнера"""

    XA_PA_ZERO = "XA_PA_zero"
    PA_PB_ZERO = "PA_PB_zero"
    XB_ZERO = "XB_zero"

    @property
    def axes(self) -> Tuple[str, str]:
        """(горизонтальная, вертикальная) переменные"""
        return _PLANE_AXES[self]


_PLANE_AXES: Dict[WignerPlane, Tuple[str, str]] = {
    WignerPlane.XA_PA_ZERO: ("x_b", "p_b"),
    WignerPlane.PA_PB_ZERO: ("x_a", "x_b"),
    WignerPlane.XB_ZERO: ("x_a", "p_a"),
}


class GridSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    plane: WignerPlane
    lo: float = -3.0
    hi: float = 3.0
    step: float = Field(default=0.05, gt=0.0)
    # значения неварьируемых координат (по умолчанию 0)
    fixed: Dict[str, float] = Field(default_factory=dict)

    @field_validator("fixed")
    @classmethod
    def known_coordinates(cls, v: Dict[str, float]) -> Dict[str, float]:
        unknown = set(v) - set(COORDINATES)
        if unknown:
            raise ValueError(f"неизвестные координаты: {sorted(unknown)}")
        if not all(math.isfinite(x) for x in v.values()):
            raise ValueError("координаты должны быть конечными")
        return v

    @model_validator(mode="after")
    def check_range(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)) or self.hi <= self.lo:
            raise ValueError("требуется lo < hi")
        varying = set(self.plane.axes) & set(self.fixed)
        if varying:
            raise ValueError(f"координаты {sorted(varying)} меняются в этом сечении")
        return self

    @property
    def n_points(self) -> int:
        return int(round((self.hi - self.lo) / self.step)) + 1


class WignerAxes(BaseModel):
    """JSON описание осей сетки, сопровождающее CSV матрицу"""

    plane: WignerPlane
    x_name: str
    y_name: str
    x: List[float]
    y: List[float]
    fixed: Dict[str, float]
    origin_value: Optional[float] = None
