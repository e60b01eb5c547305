"""
Фоковское пространство двух мод: входное состояние, светоделитель,
канал потерь, фазовое усреднение и метрики.
"""

import logging
from dataclasses import dataclass
from functools import lru_cache
from math import comb, factorial, sqrt
from typing import Optional, Union

import numpy as np
from scipy import linalg

from app.core.exceptions import DimensionMismatchError, ParameterError, TruncationError
from app.models.state import SingleModeDensityMatrix, TwoModeDensityMatrix
from app.schemas.state import BeamSplitterSpec, FockCutoff, ModelSpec

logger = logging.getLogger(__name__)

TRUNCATION_TOL = 1e-14
# собственные значения ниже EIGEN_FLOOR * max считаются нулём
EIGEN_FLOOR = 1e-12
PURE_TOL = 1e-10


@dataclass(frozen=True)
class FockUnitary:
    """Матрица (d², d²) и маска столбцов (k, l), переходы из которых точны при усечении"""

    matrix: np.ndarray
    valid: np.ndarray


def make_input_state(eta_prep: float, cutoff: FockCutoff) -> SingleModeDensityMatrix:
    """ρ_in = η|1><1| + (1-η)|0><0|"""
    if not 0.0 <= eta_prep <= 1.0:
        raise ParameterError("eta_prep", eta_prep, "0 <= eta_prep <= 1")
    rho = np.zeros((cutoff.dim, cutoff.dim), dtype=np.complex128)
    rho[0, 0] = 1.0 - eta_prep
    rho[1, 1] = eta_prep
    return SingleModeDensityMatrix(rho)


@lru_cache(maxsize=32)
def _beam_splitter_matrix(tau: float, rho: float, n_max: int) -> np.ndarray:
    # a† -> τa† - ρb†,  b† -> ρa† + τb†,  так что U|1,0> = τ|1,0> - ρ|0,1>
    d = n_max + 1
    u = np.zeros((d, d, d, d), dtype=np.float64)
    for k in range(d):
        for l in range(d):
            total = k + l
            norm = sqrt(factorial(k) * factorial(l))
            for i in range(k + 1):
                for j in range(l + 1):
                    p, q = i + j, total - i - j
                    if p > n_max or q > n_max:
                        continue
                    amp = (
                        comb(k, i)
                        * comb(l, j)
                        * tau**i
                        * (-rho) ** (k - i)
                        * rho**j
                        * tau ** (l - j)
                    )
                    u[p, q, k, l] += amp * sqrt(factorial(p) * factorial(q)) / norm
    matrix = u.reshape(d * d, d * d)
    matrix.setflags(write=False)
    return matrix


def beam_splitter_unitary(bs: BeamSplitterSpec, cutoff: FockCutoff) -> FockUnitary:
    """Унитарная матрица светоделителя в фоковском базисе двух мод"""
    matrix = _beam_splitter_matrix(bs.tau, bs.rho, cutoff.n_max)
    idx = np.arange(cutoff.dim)
    valid = ((idx[:, None] + idx[None, :]) <= cutoff.n_max).reshape(-1)
    return FockUnitary(matrix=matrix, valid=valid)


def tensor_product(
    a: SingleModeDensityMatrix, b: SingleModeDensityMatrix
) -> TwoModeDensityMatrix:
    if a.dim != b.dim:
        raise DimensionMismatchError(a.dim, b.dim)
    return TwoModeDensityMatrix(
        cutoff=a.cutoff, elements=np.einsum("km,ln->klmn", a.elements, b.elements)
    )


def vacuum_single(cutoff: FockCutoff) -> SingleModeDensityMatrix:
    rho = np.zeros((cutoff.dim, cutoff.dim), dtype=np.complex128)
    rho[0, 0] = 1.0
    return SingleModeDensityMatrix(rho)


def apply_beam_splitter(state: TwoModeDensityMatrix, bs: BeamSplitterSpec) -> TwoModeDensityMatrix:
    """U ρ U†; отказ, если состояние касается секторов k+l >= n_max"""
    n_max = state.cutoff.n_max
    idx = np.arange(state.dim)
    total = idx[:, None] + idx[None, :]
    sector = np.maximum(total[:, :, None, None], total[None, None, :, :])
    offending = (sector >= n_max) & (np.abs(state.elements) > TRUNCATION_TOL)
    if offending.any():
        raise TruncationError(int(sector[offending].max()), n_max)
    u = beam_splitter_unitary(bs, state.cutoff).matrix
    out = u @ state.as_matrix() @ u.conj().T
    return TwoModeDensityMatrix.from_matrix(state.cutoff, out)


def make_true_state(model: ModelSpec, include_detection_loss: bool) -> TwoModeDensityMatrix:
    """U (ρ_in ⊗ |0><0|) U†, при необходимости с потерями η_det в обеих модах"""
    cutoff = model.cutoff
    rho_in = make_input_state(model.eta_prep, cutoff)
    state = apply_beam_splitter(tensor_product(rho_in, vacuum_single(cutoff)), model.bs)
    if include_detection_loss:
        state = apply_loss(state, model.eta_det, "both")
    return state


@lru_cache(maxsize=64)
def loss_kraus(eta: float, dim: int) -> np.ndarray:
    """
    Операторы Крауса канала Бернулли: E_j[n-j, n] = sqrt(C(n, j) η^(n-j) (1-η)^j).
    Массив формы (dim, dim, dim), индекс j первый.
    """
    kraus = np.zeros((dim, dim, dim), dtype=np.float64)
    for j in range(dim):
        for n in range(j, dim):
            kraus[j, n - j, n] = sqrt(comb(n, j) * eta ** (n - j) * (1.0 - eta) ** j)
    kraus.setflags(write=False)
    return kraus


def _check_eta(eta: float, name: str = "eta") -> None:
    if not 0.0 < eta <= 1.0:
        raise ParameterError(name, eta, f"0 < {name} <= 1")


def apply_loss(
    state: Union[TwoModeDensityMatrix, SingleModeDensityMatrix], eta: float, mode: str = "both"
) -> Union[TwoModeDensityMatrix, SingleModeDensityMatrix]:
    """Канал потерь Бернулли в выбранной моде ('A', 'B' или 'both')"""
    _check_eta(eta)
    if isinstance(state, SingleModeDensityMatrix):
        kraus = loss_kraus(eta, state.dim)
        return SingleModeDensityMatrix(
            np.einsum("jam,mn,jbn->ab", kraus, state.elements, kraus)
        )
    if mode not in ("A", "B", "both"):
        raise ParameterError("mode", mode, "A | B | both")
    if eta == 1.0:
        return state
    kraus = loss_kraus(eta, state.dim)
    rho = state.elements
    if mode in ("A", "both"):
        rho = np.einsum("jak,klmn,jbm->albn", kraus, rho, kraus)
    if mode in ("B", "both"):
        rho = np.einsum("jal,klmn,jbn->kamb", kraus, rho, kraus)
    return TwoModeDensityMatrix(cutoff=state.cutoff, elements=rho)


def phase_average(state: TwoModeDensityMatrix) -> TwoModeDensityMatrix:
    """Обнуляет элементы с k+l != m+n"""
    return TwoModeDensityMatrix(
        cutoff=state.cutoff, elements=np.where(state.sector_mask(), state.elements, 0.0)
    )


def _clean_spectrum(vals: np.ndarray) -> np.ndarray:
    top = float(np.max(vals, initial=0.0))
    return np.where(vals > EIGEN_FLOOR * top, vals, 0.0)


def _psd_sqrt(matrix: np.ndarray) -> np.ndarray:
    vals, vecs = linalg.eigh(0.5 * (matrix + matrix.conj().T))
    return (vecs * np.sqrt(_clean_spectrum(vals))) @ vecs.conj().T


def _pure_vector(matrix: np.ndarray) -> Optional[np.ndarray]:
    """Вектор состояния, если матрица чистая, иначе None"""
    vals, vecs = linalg.eigh(0.5 * (matrix + matrix.conj().T))
    if vals[-1] < 1.0 - PURE_TOL or np.sum(np.abs(vals[:-1])) > PURE_TOL:
        return None
    return vecs[:, -1]


def fidelity(a: TwoModeDensityMatrix, b: TwoModeDensityMatrix) -> float:
    """
    Fidelity Ульмана (Tr sqrt(sqrt(a) b sqrt(a)))².
    Если одно из состояний чистое, F = <ψ|ρ|ψ>.
    """
    if a.cutoff != b.cutoff:
        raise DimensionMismatchError(a.cutoff.n_max, b.cutoff.n_max)
    ma, mb = a.as_matrix(), b.as_matrix()
    for pure, other in ((ma, mb), (mb, ma)):
        psi = _pure_vector(pure)
        if psi is not None:
            value = float((psi.conj() @ other @ psi).real)
            return min(max(value, 0.0), 1.0)
    sa = _psd_sqrt(ma)
    inner = sa @ mb @ sa
    vals = _clean_spectrum(linalg.eigvalsh(0.5 * (inner + inner.conj().T)))
    value = float(np.sum(np.sqrt(vals)) ** 2)
    return min(max(value, 0.0), 1.0)


def purity(state: TwoModeDensityMatrix) -> float:
    m = state.as_matrix()
    return float(np.trace(m @ m).real)
