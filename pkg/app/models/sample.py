"""
Отсчёты двухмодового гомодинного детектора
"""

import math
from dataclasses import dataclass
from typing import Iterator, NamedTuple, Sequence, Union

import numpy as np

from app.core.exceptions import DimensionMismatchError, ParameterError


class QuadratureSample(NamedTuple):
    """Одно событие: относительная фаза и пара квадратур (единицы дробового шума)"""

    delta_theta: float
    x_a: float
    x_b: float


@dataclass(frozen=True)
class SampleBatch:
    """Последовательность QuadratureSample, хранимая по столбцам"""

    delta_theta: np.ndarray
    x_a: np.ndarray
    x_b: np.ndarray

    def __post_init__(self):
        cols = [
            np.array(getattr(self, n), dtype=np.float64, copy=True).reshape(-1)
            for n in ("delta_theta", "x_a", "x_b")
        ]
        if not len(cols[0]) == len(cols[1]) == len(cols[2]):
            raise DimensionMismatchError(len(cols[0]), (len(cols[1]), len(cols[2])))
        for col in cols:
            if not np.all(np.isfinite(col)):
                raise ParameterError("samples", "non-finite", "finite values")
        if len(cols[0]) and (cols[0].min() < 0.0 or cols[0].max() >= 2.0 * math.pi):
            raise ParameterError("delta_theta", float(cols[0].max()), "[0, 2π)")
        for name, col in zip(("delta_theta", "x_a", "x_b"), cols):
            col.setflags(write=False)
            object.__setattr__(self, name, col)

    @classmethod
    def from_samples(cls, samples: Sequence[QuadratureSample]) -> "SampleBatch":
        arr = np.asarray(samples, dtype=np.float64).reshape(-1, 3)
        return cls(delta_theta=arr[:, 0], x_a=arr[:, 1], x_b=arr[:, 2])

    @classmethod
    def concatenate(cls, batches: Sequence["SampleBatch"]) -> "SampleBatch":
        if not batches:
            return cls(delta_theta=[], x_a=[], x_b=[])
        return cls(
            delta_theta=np.concatenate([b.delta_theta for b in batches]),
            x_a=np.concatenate([b.x_a for b in batches]),
            x_b=np.concatenate([b.x_b for b in batches]),
        )

    def __len__(self) -> int:
        return len(self.delta_theta)

    def __iter__(self) -> Iterator[QuadratureSample]:
        for row in zip(self.delta_theta, self.x_a, self.x_b):
            yield QuadratureSample(*(float(v) for v in row))

    def __getitem__(self, index: Union[int, slice, np.ndarray]):
        if isinstance(index, (int, np.integer)):
            return QuadratureSample(
                float(self.delta_theta[index]), float(self.x_a[index]), float(self.x_b[index])
            )
        return SampleBatch(
            delta_theta=self.delta_theta[index], x_a=self.x_a[index], x_b=self.x_b[index]
        )
