"""
Бинированные POVM двухмодового гомодинного детектора и гистограммы отсчётов
"""

from dataclasses import dataclass
from typing import List

import numpy as np

from app.core.exceptions import DimensionMismatchError, ParameterError
from app.models.state import TwoModeDensityMatrix
from app.schemas.homodyne import PhaseSetting, QuadBin
from app.schemas.state import FockCutoff


@dataclass(frozen=True)
class PovmSet:
    """
    Π_j = Π_A(фазовый бин p, бин квадратуры a) ⊗ Π_B(0, бин квадратуры b).

    Элементы хранятся по модам: mode_a (P, Q, d, d) зависит от фазы,
    mode_b (Q, d, d) соответствует θ_B = 0.
    """

    cutoff: FockCutoff
    eta_det: float
    phase_edges: np.ndarray
    quad_edges: np.ndarray
    mode_a: np.ndarray
    mode_b: np.ndarray
    bin_averaged: bool = True

    def __post_init__(self):
        for name in ("phase_edges", "quad_edges", "mode_a", "mode_b"):
            getattr(self, name).setflags(write=False)

    @property
    def n_phase(self) -> int:
        return self.mode_a.shape[0]

    @property
    def n_quad(self) -> int:
        return self.mode_b.shape[0]

    @property
    def shape(self) -> tuple:
        return (self.n_phase, self.n_quad, self.n_quad)

    @property
    def phase_bins(self) -> List[PhaseSetting]:
        centers = 0.5 * (self.phase_edges[:-1] + self.phase_edges[1:])
        return [PhaseSetting(delta_theta=float(c)) for c in centers]

    @property
    def quad_bins(self) -> List[QuadBin]:
        return [
            QuadBin(lo=float(lo), hi=float(hi))
            for lo, hi in zip(self.quad_edges[:-1], self.quad_edges[1:])
        ]

    def element(self, p: int, a: int, b: int) -> np.ndarray:
        """Двухмодовый элемент (d², d²) в порядке индексов (k, l)"""
        return np.kron(self.mode_a[p, a], self.mode_b[b])

    def probabilities(self, state: TwoModeDensityMatrix) -> np.ndarray:
        """Tr[ρ Π_j] для всех j, массив (P, Q, Q)"""
        if state.cutoff != self.cutoff:
            raise DimensionMismatchError(state.cutoff.n_max, self.cutoff.n_max)
        partial = np.einsum("klmn,bnl->kmb", state.elements, self.mode_b)
        return np.einsum("pamk,kmb->pab", self.mode_a, partial).real

    def weighted_sum(self, weights: np.ndarray) -> np.ndarray:
        """Σ_j w_j Π_j как тензор (d, d, d, d)"""
        partial = np.einsum("pab,bln->paln", weights, self.mode_b)
        return np.einsum("pakm,paln->klmn", self.mode_a, partial)

    def completeness_error(self) -> float:
        """max |Σ_{a,b} Π_(p,a,b) - I| по всем фазовым бинам"""
        eye_a = np.eye(self.cutoff.dim)
        sum_b = self.mode_b.sum(axis=0)
        worst = 0.0
        for p in range(self.n_phase):
            total = np.kron(self.mode_a[p].sum(axis=0), sum_b)
            worst = max(worst, float(np.max(np.abs(total - np.kron(eye_a, eye_a)))))
        return worst


@dataclass(frozen=True)
class Histogram:
    """Отсчёты f_j по бинам (фаза, X_A, X_B); допускаются дробные значения"""

    povm: PovmSet
    counts: np.ndarray

    def __post_init__(self):
        counts = np.array(self.counts, dtype=np.float64, copy=True)
        if counts.shape != self.povm.shape:
            raise DimensionMismatchError(counts.shape, self.povm.shape)
        if np.any(counts < 0):
            raise ParameterError("counts", float(counts.min()), "f_j >= 0")
        counts.setflags(write=False)
        object.__setattr__(self, "counts", counts)

    @property
    def total(self) -> float:
        return float(self.counts.sum())
