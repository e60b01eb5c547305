"""
Матрицы плотности в усечённом фоковском базисе
"""

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from app.core.exceptions import DimensionMismatchError, NumericalConsistencyError
from app.schemas.state import FockCutoff, StateDocument

HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-10
PSD_TOL = -1e-8


def _frozen(values: np.ndarray) -> np.ndarray:
    arr = np.array(values, dtype=np.complex128, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class SingleModeDensityMatrix:
    """Одномодовое состояние ρ_mn"""

    elements: np.ndarray

    def __post_init__(self):
        arr = _frozen(self.elements)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise DimensionMismatchError(arr.shape, "square matrix")
        object.__setattr__(self, "elements", arr)

    @property
    def dim(self) -> int:
        return self.elements.shape[0]

    @property
    def cutoff(self) -> FockCutoff:
        return FockCutoff(n_max=self.dim - 1)

    def trace(self) -> float:
        return float(np.trace(self.elements).real)

    def check(self) -> "SingleModeDensityMatrix":
        _check_density_matrix(self.elements)
        return self


@dataclass(frozen=True)
class TwoModeDensityMatrix:
    """
    Двухмодовое состояние ρ_klmn = <k_A, l_B| ρ |m_A, n_B>.

    Хранится как тензор (d, d, d, d); as_matrix() даёт матрицу (d², d²)
    со строками (k, l) и столбцами (m, n).
    """

    cutoff: FockCutoff
    elements: np.ndarray

    def __post_init__(self):
        arr = _frozen(self.elements)
        d = self.cutoff.dim
        if arr.shape != (d, d, d, d):
            raise DimensionMismatchError(arr.shape, (d, d, d, d))
        object.__setattr__(self, "elements", arr)

    @classmethod
    def from_matrix(cls, cutoff: FockCutoff, matrix: np.ndarray) -> "TwoModeDensityMatrix":
        d = cutoff.dim
        matrix = np.asarray(matrix)
        if matrix.shape != (d * d, d * d):
            raise DimensionMismatchError(matrix.shape, (d * d, d * d))
        return cls(cutoff=cutoff, elements=matrix.reshape(d, d, d, d))

    @classmethod
    def vacuum(cls, cutoff: FockCutoff) -> "TwoModeDensityMatrix":
        d = cutoff.dim
        rho = np.zeros((d, d, d, d), dtype=np.complex128)
        rho[0, 0, 0, 0] = 1.0
        return cls(cutoff=cutoff, elements=rho)

    @classmethod
    def maximally_mixed(cls, cutoff: FockCutoff) -> "TwoModeDensityMatrix":
        return cls.from_matrix(cutoff, np.eye(cutoff.two_mode_dim) / cutoff.two_mode_dim)

    @property
    def dim(self) -> int:
        return self.cutoff.dim

    def as_matrix(self) -> np.ndarray:
        d2 = self.cutoff.two_mode_dim
        return self.elements.reshape(d2, d2)

    def trace(self) -> float:
        return float(np.trace(self.as_matrix()).real)

    def reduced(self, mode: str) -> SingleModeDensityMatrix:
        """Частичный след по другой моде"""
        if mode == "A":
            return SingleModeDensityMatrix(np.einsum("klml->km", self.elements))
        return SingleModeDensityMatrix(np.einsum("klkn->ln", self.elements))

    def sector_mask(self) -> np.ndarray:
        """True там, где k+l = m+n"""
        idx = np.arange(self.dim)
        total_in = idx[:, None] + idx[None, :]
        return total_in[:, :, None, None] == total_in[None, None, :, :]

    def check(self) -> "TwoModeDensityMatrix":
        _check_density_matrix(self.as_matrix())
        return self

    def to_document(self) -> StateDocument:
        return StateDocument(
            n_max=self.cutoff.n_max,
            real=self.elements.real.tolist(),
            imag=self.elements.imag.tolist(),
        )

    @classmethod
    def from_document(cls, doc: StateDocument) -> "TwoModeDensityMatrix":
        values = np.asarray(doc.real, dtype=float) + 1j * np.asarray(doc.imag, dtype=float)
        return cls(cutoff=FockCutoff(n_max=doc.n_max), elements=values)


def _check_density_matrix(matrix: np.ndarray) -> None:
    herm = float(np.max(np.abs(matrix - matrix.conj().T)))
    if herm > HERMITIAN_TOL:
        raise NumericalConsistencyError(
            "Матрица плотности не эрмитова", {"max_deviation": herm}
        )
    trace = complex(np.trace(matrix))
    if abs(trace - 1.0) > TRACE_TOL:
        raise NumericalConsistencyError(
            "След матрицы плотности не равен 1", {"trace": trace.real}
        )
    min_eig = float(linalg.eigvalsh(0.5 * (matrix + matrix.conj().T))[0])
    if min_eig < PSD_TOL:
        raise NumericalConsistencyError(
            "Матрица плотности не положительно полуопределена", {"min_eigenvalue": min_eig}
        )
