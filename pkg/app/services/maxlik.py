"""
Реконструкция двухмодовой матрицы плотности методом максимального
правдоподобия (итерации R ρ R) по бинированным гомодинным данным.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import List, Optional, Tuple

import numpy as np

from app.core.exceptions import (
    DegenerateSupportError,
    DimensionMismatchError,
    PreconditionError,
)
from app.models.povm import Histogram, PovmSet
from app.models.sample import SampleBatch
from app.models.state import TwoModeDensityMatrix
from app.schemas.homodyne import TWO_PI
from app.schemas.recon import EfficiencyFit, ReconConfig, ReconDiagnostics
from app.schemas.state import FockCutoff, ModelSpec
from app.services.fock import make_true_state, phase_average
from app.services.homodyne import build_povm_set

logger = logging.getLogger(__name__)

# допустимое уменьшение log L за итерацию (округление)
MONOTONE_TOL = 1e-10
MIN_DILUTION = 1e-8


def povm_for(config: ReconConfig) -> PovmSet:
    return build_povm_set(
        FockCutoff(n_max=config.n_max),
        config.eta_det,
        config.quad_edges,
        config.n_phase_bins,
        bin_averaged=config.bin_averaged,
    )


def bin_data(
    samples: SampleBatch, config: ReconConfig, povm: Optional[PovmSet] = None
) -> Histogram:
    """Раскладывает отсчёты по бинам (фаза, X_A, X_B); сумма отсчётов сохраняется"""
    povm = povm or povm_for(config)
    width = TWO_PI / povm.n_phase
    p = np.minimum((samples.delta_theta / width).astype(np.intp), povm.n_phase - 1)
    a = np.searchsorted(povm.quad_edges, samples.x_a, side="right") - 1
    b = np.searchsorted(povm.quad_edges, samples.x_b, side="right") - 1
    counts = np.zeros(povm.shape, dtype=np.float64)
    np.add.at(counts, (p, a, b), 1.0)
    return Histogram(povm=povm, counts=counts)


def histogram_from_probabilities(
    povm: PovmSet, state: TwoModeDensityMatrix, total: float
) -> Histogram:
    """Дробные отсчёты f_j = total · Tr[ρ Π_j] / P (по одинаковой доле на фазовый бин)"""
    probs = np.maximum(povm.probabilities(state), 0.0)
    return Histogram(povm=povm, counts=total * probs / povm.n_phase)


def _probabilities(state: TwoModeDensityMatrix, hist: Histogram) -> np.ndarray:
    if state.cutoff != hist.povm.cutoff:
        raise DimensionMismatchError(state.cutoff.n_max, hist.povm.cutoff.n_max)
    probs = hist.povm.probabilities(state)
    bad = (hist.counts > 0) & (probs <= 0)
    if bad.any():
        index = tuple(int(i) for i in np.argwhere(bad)[0])
        raise DegenerateSupportError(index, float(probs[index]))
    return probs


def _log_likelihood(counts: np.ndarray, probs: np.ndarray) -> float:
    mask = counts > 0
    return float(np.sum(counts[mask] * np.log(probs[mask])))


def log_likelihood(state: TwoModeDensityMatrix, hist: Histogram) -> float:
    """Σ_j f_j ln Tr[ρ Π_j]; бины с f_j = 0 не вносят вклад"""
    if hist.total == 0:
        return 0.0
    return _log_likelihood(hist.counts, _probabilities(state, hist))


def _partial_r(povm: PovmSet, weights: np.ndarray, p: int) -> np.ndarray:
    partial = np.einsum("ab,bln->aln", weights[p], povm.mode_b)
    return np.einsum("akm,aln->klmn", povm.mode_a[p], partial)


def _pairwise_sum(terms: List[np.ndarray]) -> np.ndarray:
    while len(terms) > 1:
        paired = [terms[i] + terms[i + 1] for i in range(0, len(terms) - 1, 2)]
        if len(terms) % 2:
            paired.append(terms[-1])
        terms = paired
    return terms[0]


def r_operator(
    povm: PovmSet,
    counts: np.ndarray,
    probs: np.ndarray,
    pool: Optional[ThreadPoolExecutor] = None,
) -> np.ndarray:
    """R = Σ_j (f_j / p_j) Π_j как матрица (d², d²); порядок суммирования фиксирован"""
    weights = np.where(counts > 0, counts / np.where(probs > 0, probs, 1.0), 0.0)
    bins = range(povm.n_phase)
    if pool is None:
        terms = [_partial_r(povm, weights, p) for p in bins]
    else:
        terms = list(pool.map(lambda p: _partial_r(povm, weights, p), bins))
    d2 = povm.cutoff.two_mode_dim
    return _pairwise_sum(terms).reshape(d2, d2)


def _normalized(cutoff: FockCutoff, matrix: np.ndarray) -> TwoModeDensityMatrix:
    matrix = 0.5 * (matrix + matrix.conj().T)
    matrix = matrix / np.trace(matrix).real
    return phase_average(TwoModeDensityMatrix.from_matrix(cutoff, matrix))


def reconstruct(
    hist: Histogram,
    config: ReconConfig,
    initial: Optional[TwoModeDensityMatrix] = None,
    threads: int = 1,
) -> Tuple[TwoModeDensityMatrix, ReconDiagnostics]:
    """
    Итерации ρ <- N[R(ρ) ρ R(ρ)] с проекцией на секторы k+l = m+n после
    каждого шага. При падении правдоподобия шаг заменяется разбавленным
    (I + εR/N) ρ (I + εR/N) с уменьшением ε вдвое.
    """
    if hist.total <= 0:
        raise PreconditionError("Пустая гистограмма", {"total": hist.total})
    povm = hist.povm
    cutoff = povm.cutoff
    if cutoff.n_max != config.n_max:
        raise DimensionMismatchError(cutoff.n_max, config.n_max)
    if initial is not None:
        state = phase_average(initial)
    else:
        state = TwoModeDensityMatrix.maximally_mixed(cutoff)

    counts = hist.counts
    total = hist.total
    eye = np.eye(cutoff.two_mode_dim)
    probs = _probabilities(state, hist)
    current = _log_likelihood(counts, probs)
    deltas: List[float] = []
    dilution_steps = 0
    min_dilution: Optional[float] = None
    converged = False
    iteration = 0

    pool = ThreadPoolExecutor(max_workers=threads) if threads > 1 else None
    try:
        for iteration in range(1, config.max_iterations + 1):
            r = r_operator(povm, counts, probs, pool)
            rho = state.as_matrix()
            candidate = _normalized(cutoff, r @ rho @ r)
            cand_probs = _probabilities(candidate, hist)
            value = _log_likelihood(counts, cand_probs)

            if value < current - MONOTONE_TOL * max(1.0, abs(current)):
                eps = 2.0
                r_scaled = r / total
                while value < current and eps > MIN_DILUTION:
                    eps *= 0.5
                    step = (eye + eps * r_scaled) / (1.0 + eps)
                    candidate = _normalized(cutoff, step @ rho @ step)
                    cand_probs = _probabilities(candidate, hist)
                    value = _log_likelihood(counts, cand_probs)
                dilution_steps += 1
                min_dilution = eps if min_dilution is None else min(min_dilution, eps)
                logger.warning(
                    f"Likelihood decreased at iteration {iteration}, diluted step eps={eps:g}"
                )

            delta = value - current
            deltas.append(delta)
            state, probs, current = candidate, cand_probs, value
            if iteration % 100 == 0:
                logger.info(f"MaxLik iteration {iteration}: logL={current:.10g} dL={delta:.3g}")
            if abs(delta) <= config.tol * max(1.0, abs(current)):
                converged = True
                break
    finally:
        if pool is not None:
            pool.shutdown()

    if not converged:
        logger.warning(f"MaxLik did not converge in {config.max_iterations} iterations")
    else:
        logger.info(f"MaxLik converged after {iteration} iterations, logL={current:.10g}")

    diagnostics = ReconDiagnostics(
        iterations=iteration,
        converged=converged,
        log_likelihood=current,
        deltas=deltas,
        dilution_steps=dilution_steps,
        min_dilution=min_dilution,
        total_counts=total,
    )
    return state, diagnostics


def effective_efficiency(state: TwoModeDensityMatrix) -> EfficiencyFit:
    """Подгонка смесью η|Ψ><Ψ| + (1-η)|00><00|"""
    if state.cutoff.n_max < 1:
        raise DimensionMismatchError(state.cutoff.n_max, ">= 1")
    rho = state.elements
    eta = float(1.0 - rho[0, 0, 0, 0].real)
    tau_squared = float(rho[1, 0, 1, 0].real / eta) if eta > 0 else 0.0
    tau_squared = min(max(tau_squared, 0.0), 1.0)
    model = ModelSpec(
        eta_prep=min(max(eta, 0.0), 1.0),
        eta_det=1.0,
        tau_squared=tau_squared,
        n_max=state.cutoff.n_max,
    )
    expected = make_true_state(model, include_detection_loss=False)
    residual = float(np.linalg.norm(rho - expected.elements))
    return EfficiencyFit(eta=eta, tau_squared=tau_squared, residual=residual)

