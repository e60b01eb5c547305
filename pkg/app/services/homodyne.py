"""
Гомодинное измерение: волновые функции квадратур, элементы POVM
(идеальные и с учётом потерь) и совместная плотность pr_δθ(X_A, X_B).

Единицы: дисперсия квадратуры вакуума 1/2, ψ_0(x) = π^(-1/4) e^(-x²/2).
"""

import logging
import math
from functools import lru_cache
from typing import Sequence, Tuple, Union

import numpy as np
from scipy import integrate

from app.core.config import settings
from app.core.exceptions import ParameterError, PreconditionError
from app.models.povm import PovmSet
from app.models.state import SingleModeDensityMatrix, TwoModeDensityMatrix
from app.schemas.homodyne import TWO_PI, PhaseSetting, QuadBin
from app.schemas.state import FockCutoff, ModelSpec
from app.services import storage
from app.services.fock import (
    apply_loss,
    loss_kraus,
    make_input_state,
    make_true_state,
    phase_average,
)

logger = logging.getLogger(__name__)

QUAD_EPSABS = 1e-11
QUAD_LIMIT = 200
# запас по числу фотонов при построении сопряжённого канала потерь
ADJOINT_MARGIN = 3

ArrayLike = Union[float, np.ndarray]


def hermite_functions(n_max: int, x: ArrayLike) -> np.ndarray:
    """
    ψ_0..ψ_n_max в точках x через трёхчленную рекурсию
    ψ_{n+1} = sqrt(2/(n+1)) x ψ_n - sqrt(n/(n+1)) ψ_{n-1}.
    Форма результата (n_max + 1, *x.shape).
    """
    x = np.asarray(x, dtype=np.float64)
    out = np.empty((n_max + 1,) + x.shape, dtype=np.float64)
    out[0] = math.pi**-0.25 * np.exp(-0.5 * x**2)
    if n_max >= 1:
        out[1] = math.sqrt(2.0) * x * out[0]
    for n in range(1, n_max):
        out[n + 1] = math.sqrt(2.0 / (n + 1)) * x * out[n] - math.sqrt(n / (n + 1)) * out[n - 1]
    return out


def fock_wavefunction(n: int, x: ArrayLike) -> ArrayLike:
    """ψ_n(x) = H_n(x) e^(-x²/2) / sqrt(2^n n! sqrt(π))"""
    if n < 0:
        raise ParameterError("n", n, "n >= 0")
    value = hermite_functions(n, x)[n]
    return float(value) if value.ndim == 0 else value


@lru_cache(maxsize=4096)
def bin_overlaps(lo: float, hi: float, dim: int) -> np.ndarray:
    """∫_lo^hi ψ_m ψ_n dx адаптивной квадратурой; бесконечные границы допускаются"""
    out = np.empty((dim, dim), dtype=np.float64)
    for m in range(dim):
        for n in range(m, dim):

            def integrand(x, m=m, n=n):
                psi = hermite_functions(n, x)
                return psi[m] * psi[n]

            value, _ = integrate.quad(
                integrand, lo, hi, epsabs=QUAD_EPSABS, epsrel=0.0, limit=QUAD_LIMIT
            )
            out[m, n] = out[n, m] = value
    out.setflags(write=False)
    return out


def phase_factors(dim: int, theta: float) -> np.ndarray:
    """F[m, n] = e^{i(n-m)θ}"""
    idx = np.arange(dim)
    return np.exp(1j * (idx[None, :] - idx[:, None]) * theta)


def averaged_phase_factors(dim: int, lo: float, hi: float) -> np.ndarray:
    """Среднее e^{i(n-m)θ} по θ ∈ [lo, hi]"""
    idx = np.arange(dim)
    d = (idx[None, :] - idx[:, None]).astype(np.float64)
    width = hi - lo
    safe = np.where(d == 0, 1.0, d)
    avg = (np.exp(1j * safe * hi) - np.exp(1j * safe * lo)) / (1j * safe * width)
    return np.where(d == 0, 1.0 + 0.0j, avg)


def _adjoint_loss(matrix: np.ndarray, eta: float) -> np.ndarray:
    """Сопряжённый канал Бернулли: Π' = Σ_j E_j† Π E_j"""
    kraus = loss_kraus(eta, matrix.shape[0])
    return np.einsum("jam,ab,jbn->mn", kraus, matrix, kraus)


def ideal_povm_element(theta: float, bin: QuadBin, cutoff: FockCutoff) -> np.ndarray:
    """<m|Π|n> = e^{i(n-m)θ} ∫_bin ψ_m ψ_n dx"""
    return phase_factors(cutoff.dim, theta) * bin_overlaps(bin.lo, bin.hi, cutoff.dim)


@lru_cache(maxsize=4096)
def _adjusted_overlaps(lo: float, hi: float, eta_det: float, dim: int) -> np.ndarray:
    work = dim + ADJOINT_MARGIN
    adjusted = _adjoint_loss(bin_overlaps(lo, hi, work), eta_det)[:dim, :dim]
    adjusted = np.ascontiguousarray(adjusted.real)
    adjusted.setflags(write=False)
    return adjusted


def adjusted_povm_element(
    theta: float, bin: QuadBin, eta_det: float, cutoff: FockCutoff
) -> np.ndarray:
    """Элемент POVM с поправкой на эффективность детектора η_det"""
    if not 0.0 < eta_det <= 1.0:
        raise ParameterError("eta_det", eta_det, "0 < eta_det <= 1")
    if eta_det == 1.0:
        return ideal_povm_element(theta, bin, cutoff)
    return phase_factors(cutoff.dim, theta) * _adjusted_overlaps(
        bin.lo, bin.hi, eta_det, cutoff.dim
    )


def quadrature_edges(inner_edges: Sequence[float]) -> np.ndarray:
    """Внутренние границы бинов плюс два полубесконечных хвоста"""
    return np.concatenate(([-np.inf], np.asarray(inner_edges, dtype=np.float64), [np.inf]))


def build_povm_set(
    cutoff: FockCutoff,
    eta_det: float,
    inner_edges: Sequence[float],
    n_phase_bins: int,
    bin_averaged: bool = True,
    use_cache: bool = True,
) -> PovmSet:
    """
    Набор POVM для n_phase_bins фазовых бинов на [0, 2π) и бинов квадратур
    (-inf, e_0), [e_0, e_1), ..., [e_last, inf) в каждой моде.
    """
    if not 0.0 < eta_det <= 1.0:
        raise ParameterError("eta_det", eta_det, "0 < eta_det <= 1")
    if n_phase_bins < 1:
        raise ParameterError("n_phase_bins", n_phase_bins, ">= 1")
    edges = quadrature_edges(inner_edges)
    if np.any(np.diff(edges) <= 0):
        raise ParameterError("quad_edges", list(inner_edges), "strictly increasing")
    phase_edges = np.linspace(0.0, TWO_PI, n_phase_bins + 1)

    key = None
    if use_cache and settings.POVM_CACHE_DIR:
        key = storage.povm_cache_key(cutoff.n_max, eta_det, edges, phase_edges, bin_averaged)
        cached = storage.load_povm(key, cutoff, eta_det, bin_averaged)
        if cached is not None:
            logger.debug(f"POVM cache hit {key[:12]}")
            return cached

    logger.info(
        f"Building POVM set: n_max={cutoff.n_max} eta_det={eta_det} "
        f"phase_bins={n_phase_bins} quad_bins={len(edges) - 1}"
    )
    d = cutoff.dim
    mode_b = np.empty((len(edges) - 1, d, d), dtype=np.complex128)
    for q, (lo, hi) in enumerate(zip(edges[:-1], edges[1:])):
        if eta_det == 1.0:
            mode_b[q] = bin_overlaps(float(lo), float(hi), d)
        else:
            mode_b[q] = _adjusted_overlaps(float(lo), float(hi), eta_det, d)

    if bin_averaged:
        factors = [
            averaged_phase_factors(d, lo, hi) for lo, hi in zip(phase_edges[:-1], phase_edges[1:])
        ]
    else:
        centers = 0.5 * (phase_edges[:-1] + phase_edges[1:])
        factors = [phase_factors(d, c) for c in centers]
    mode_a = np.stack([f[None, :, :] * mode_b for f in factors])

    povm = PovmSet(
        cutoff=cutoff,
        eta_det=eta_det,
        phase_edges=phase_edges,
        quad_edges=edges,
        mode_a=mode_a,
        mode_b=mode_b,
        bin_averaged=bin_averaged,
    )
    if key is not None:
        storage.save_povm(key, povm)
    return povm


def _as_delta(phase: Union[PhaseSetting, float]) -> float:
    return phase.delta_theta if isinstance(phase, PhaseSetting) else float(phase)


def _measured_state(state: TwoModeDensityMatrix, eta_det: float) -> np.ndarray:
    return phase_average(apply_loss(state, eta_det, "both")).elements


def joint_pdf(
    state: TwoModeDensityMatrix,
    phase: Union[PhaseSetting, float],
    x_a: ArrayLike,
    x_b: ArrayLike,
    eta_det: float = 1.0,
) -> ArrayLike:
    """
    pr_δθ(X_A, X_B) = Tr[ρ (Π'_A(δθ, x_a) ⊗ Π'_B(0, x_b))] с точечными элементами.

    Сопряжённый канал на стороне POVM эквивалентен каналу потерь на стороне
    состояния; второй вариант точен при усечении и используется здесь.
    """
    rho = _measured_state(state, eta_det)
    xa, xb = np.broadcast_arrays(np.asarray(x_a, float), np.asarray(x_b, float))
    shape = xa.shape
    n_max = state.cutoff.n_max
    ha = hermite_functions(n_max, xa.reshape(-1))
    hb = hermite_functions(n_max, xb.reshape(-1))
    delta = _as_delta(phase)
    # <m|x_δ><x_δ|k> = e^{i(k-m)δ} ψ_k ψ_m
    phi = phase_factors(state.dim, delta).T
    kernel_a = phi[:, :, None] * ha[:, None, :] * ha[None, :, :]
    kernel_b = hb[:, None, :] * hb[None, :, :]
    pdf = np.einsum("klmn,kmN,lnN->N", rho, kernel_a, kernel_b).real.reshape(shape)
    pdf = np.maximum(pdf, 0.0)
    return float(pdf) if pdf.ndim == 0 else pdf


def marginal_pdf(
    state: TwoModeDensityMatrix, x: ArrayLike, mode: str = "A", eta_det: float = 1.0
) -> ArrayLike:
    """Плотность квадратуры одной моды; не зависит от фазы после усреднения"""
    reduced = TwoModeDensityMatrix(
        cutoff=state.cutoff, elements=_measured_state(state, eta_det)
    ).reduced(mode)
    x = np.asarray(x, float)
    h = hermite_functions(state.cutoff.n_max, x.reshape(-1))
    pdf = np.einsum("km,kN,mN->N", reduced.elements, h, h).real.reshape(x.shape)
    pdf = np.maximum(pdf, 0.0)
    return float(pdf) if pdf.ndim == 0 else pdf


def q_function(state: SingleModeDensityMatrix, alpha: Union[complex, np.ndarray]) -> ArrayLike:
    """Q(α) = <α|ρ|α>/π"""
    alpha = np.asarray(alpha, dtype=np.complex128)
    flat = alpha.reshape(-1)
    n = np.arange(state.dim)
    norms = np.sqrt([math.factorial(int(k)) for k in n])
    # <n|α> = e^{-|α|²/2} α^n / sqrt(n!)
    amps = np.exp(-0.5 * np.abs(flat) ** 2)[None, :] * flat[None, :] ** n[:, None] / norms[:, None]
    q = np.einsum("mN,mn,nN->N", amps.conj(), state.elements, amps).real / math.pi
    q = q.reshape(alpha.shape)
    return float(q) if q.ndim == 0 else q


def q_function_check(
    model: ModelSpec, x_a: ArrayLike, x_b: ArrayLike
) -> Tuple[ArrayLike, ArrayLike]:
    """
    pr_{π/2}(X_A, X_B) при симметричном светоделителе и Q-функция входного
    состояния с потерями в точке α = x_a + i x_b.
    """
    if abs(model.tau_squared - 0.5) > 1e-12:
        raise PreconditionError(
            "Q-функция совпадает с pr_{π/2} только для симметричного светоделителя",
            {"tau_squared": model.tau_squared},
        )
    state = make_true_state(model, include_detection_loss=False)
    pdf = joint_pdf(state, PhaseSetting(delta_theta=math.pi / 2), x_a, x_b, model.eta_det)
    rho_in = apply_loss(make_input_state(model.eta_prep, model.cutoff), model.eta_det)
    alpha = np.asarray(x_a, float) + 1j * np.asarray(x_b, float)
    return pdf, q_function(rho_in, alpha)


def covariance(
    state: TwoModeDensityMatrix, phase: Union[PhaseSetting, float], eta_det: float = 1.0
) -> float:
    """Cov(X_A, X_B) в точной форме: Tr[ρ (x̂_δ ⊗ x̂_0)]"""
    rho = _measured_state(state, eta_det)
    d = state.dim
    # <m|x̂|k> = (sqrt(k) δ_{m,k-1} + sqrt(k+1) δ_{m,k+1}) / sqrt(2)
    ladder = np.diag(np.sqrt(np.arange(1, d)), 1)
    x_op = (ladder + ladder.T) / math.sqrt(2)
    x_a = x_op * phase_factors(d, _as_delta(phase))
    return float(np.einsum("klmn,mk,nl->", rho, x_a, x_op).real)


def expected_covariance(model: ModelSpec, phase: Union[PhaseSetting, float]) -> float:
    """-η_eff τρ cos δθ"""
    bs = model.bs
    return -model.eta_eff * bs.tau * bs.rho * math.cos(_as_delta(phase))

