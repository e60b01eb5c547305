"""
Сетка значений функции Вигнера в одном сечении
"""

from dataclasses import dataclass
from typing import Dict, Optional

import numpy as np

from app.core.exceptions import DimensionMismatchError, NumericalConsistencyError
from app.schemas.wigner import WignerAxes, WignerPlane


@dataclass(frozen=True)
class WignerGrid:
    """values[i, j] соответствует (x[j], y[i])"""

    plane: WignerPlane
    x: np.ndarray
    y: np.ndarray
    fixed: Dict[str, float]
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values)
        if np.iscomplexobj(values):
            raise NumericalConsistencyError("Значения функции Вигнера должны быть вещественными")
        if values.shape != (len(self.y), len(self.x)):
            raise DimensionMismatchError(values.shape, (len(self.y), len(self.x)))
        for name in ("x", "y", "values"):
            arr = np.array(getattr(self, name), dtype=np.float64, copy=True)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def x_name(self) -> str:
        return self.plane.axes[0]

    @property
    def y_name(self) -> str:
        return self.plane.axes[1]

    def axes(self, origin_value: Optional[float] = None) -> WignerAxes:
        return WignerAxes(
            plane=self.plane,
            x_name=self.x_name,
            y_name=self.y_name,
            x=self.x.tolist(),
            y=self.y.tolist(),
            fixed=dict(self.fixed),
            origin_value=origin_value,
        )
