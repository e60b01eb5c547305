"""
Дискриминация квадратур порогом T, корреляции E_AB(δθ), подгонка косинусом,
развёртка по порогу и независимый аналитический расчёт E.
"""

import logging
import math
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from app.core.exceptions import ParameterError, PreconditionError, ThresholdTooHighError
from app.models.sample import QuadratureSample, SampleBatch
from app.schemas.bell import (
    BELL_BOUND,
    BellBin,
    BellConfig,
    BellCurve,
    BellSummary,
    SweepRow,
)
from app.schemas.homodyne import TWO_PI
from app.schemas.state import ModelSpec
from app.services.fock import make_true_state
from app.services.homodyne import bin_overlaps, phase_factors
from app.services.sampler import make_rng

logger = logging.getLogger(__name__)

MIN_RETAINED_PROBABILITY = 1e-12
ANALYTIC_FIT_POINTS = 24


def _check_threshold(threshold: float) -> None:
    if not (threshold >= 0.0 and math.isfinite(threshold)):
        raise ParameterError("threshold", threshold, "T >= 0")


def discriminate(sample: QuadratureSample, threshold: float) -> Optional[Tuple[int, int]]:
    """(s_a, s_b) только если обе квадратуры строго за порогом"""
    _check_threshold(threshold)
    if abs(sample.x_a) > threshold and abs(sample.x_b) > threshold:
        return (1 if sample.x_a > 0 else -1, 1 if sample.x_b > 0 else -1)
    return None


def _bin_basis(n_bins: int) -> Tuple[np.ndarray, np.ndarray]:
    """Средние cos δ и sin δ по каждому фазовому бину и центры бинов"""
    edges = np.linspace(0.0, TWO_PI, n_bins + 1)
    width = edges[1] - edges[0]
    cos_avg = (np.sin(edges[1:]) - np.sin(edges[:-1])) / width
    sin_avg = (np.cos(edges[:-1]) - np.cos(edges[1:])) / width
    centers = 0.5 * (edges[:-1] + edges[1:])
    return np.column_stack([cos_avg, sin_avg]), centers


def _fit_cosine(
    design: np.ndarray, values: np.ndarray, errors: Optional[np.ndarray]
) -> Tuple[float, float, float, float]:
    """
    Невзвешенный МНК для E = a cos δ + b sin δ = -V cos(δ - φ0).
    Возвращает V, σ_V, φ0 и RMS невязки.
    """
    coef, *_ = np.linalg.lstsq(design, values, rcond=None)
    a, b = coef
    amplitude = float(math.hypot(a, b))
    offset = float(math.atan2(-b, -a)) % TWO_PI
    residual = float(np.sqrt(np.mean((design @ coef - values) ** 2)))
    sigma = 0.0
    if errors is not None and amplitude > 0:
        inv = np.linalg.inv(design.T @ design)
        # ковариация МНК при известных ошибках по бинам
        cov = inv @ design.T @ np.diag(errors**2) @ design @ inv
        grad = coef / amplitude
        sigma = float(math.sqrt(max(grad @ cov @ grad, 0.0)))
    return amplitude, sigma, offset, residual


def correlation_curve(samples: SampleBatch, config: BellConfig) -> BellCurve:
    """E_AB по фазовым бинам и подгонка -V cos(δθ - φ0)"""
    if len(samples) == 0:
        raise PreconditionError("Пустая выборка")
    threshold = config.threshold
    _check_threshold(threshold)
    n_bins = config.n_phase_bins
    width = TWO_PI / n_bins
    index = np.minimum((samples.delta_theta / width).astype(np.intp), n_bins - 1)
    keep = (np.abs(samples.x_a) > threshold) & (np.abs(samples.x_b) > threshold)
    product = np.sign(samples.x_a) * np.sign(samples.x_b)

    totals = np.bincount(index, minlength=n_bins)
    retained = np.bincount(index[keep], minlength=n_bins)
    sums = np.bincount(index[keep], weights=product[keep], minlength=n_bins)

    design, centers = _bin_basis(n_bins)
    bins: List[BellBin] = []
    used, values, errors = [], [], []
    for b in range(n_bins):
        n_ret = int(retained[b])
        if n_ret == 0:
            bins.append(
                BellBin(
                    phase_bin=b,
                    delta_theta=float(centers[b]),
                    retained=0,
                    total=int(totals[b]),
                    flagged=True,
                )
            )
            continue
        e = float(sums[b] / n_ret)
        stderr = math.sqrt(max(1.0 - e * e, 0.0) / n_ret)
        flagged = n_ret < config.min_events
        bins.append(
            BellBin(
                phase_bin=b,
                delta_theta=float(centers[b]),
                correlation=e,
                stderr=stderr,
                retained=n_ret,
                total=int(totals[b]),
                flagged=flagged,
            )
        )
        if not flagged:
            used.append(b)
            values.append(e)
            errors.append(stderr)

    flagged_count = n_bins - len(used)
    if flagged_count:
        logger.warning(
            f"{flagged_count} of {n_bins} phase bins excluded from fit "
            f"(fewer than {config.min_events} retained events)"
        )
    if len(used) < 2:
        raise PreconditionError(
            "Недостаточно фазовых бинов для подгонки",
            {"usable_bins": len(used), "threshold": threshold},
        )
    amplitude, sigma, offset, residual = _fit_cosine(
        design[used], np.asarray(values), np.asarray(errors)
    )
    return BellCurve(
        threshold=threshold,
        bins=bins,
        amplitude=amplitude,
        sigma_amplitude=sigma,
        phase_offset=offset,
        fit_residual=residual,
        retained_fraction=float(keep.sum() / len(samples)),
    )


def _tail_operators(threshold: float, dim: int) -> Tuple[np.ndarray, np.ndarray]:
    """Разность и сумма идеальных элементов POVM хвостов x > T и x < -T"""
    plus = bin_overlaps(float(threshold), math.inf, dim)
    minus = bin_overlaps(-math.inf, -float(threshold), dim)
    return plus - minus, plus + minus


def _analytic_terms(
    model: ModelSpec, threshold: float, deltas: np.ndarray
) -> Tuple[np.ndarray, np.ndarray]:
    _check_threshold(threshold)
    state = make_true_state(model, include_detection_loss=True).elements
    d = model.cutoff.dim
    diff, total = _tail_operators(threshold, d)
    numerators, retained = [], []
    for delta in deltas:
        phase = phase_factors(d, float(delta))
        numerators.append(np.einsum("klmn,mk,nl->", state, phase * diff, diff).real)
        retained.append(np.einsum("klmn,mk,nl->", state, phase * total, total).real)
    return np.asarray(numerators), np.asarray(retained)


def analytic_correlation(model: ModelSpec, threshold: float, delta_theta: float) -> float:
    """
    E(δθ) = Tr[ρ D_A(δθ) ⊗ D_B] / Tr[ρ S_A(δθ) ⊗ S_B]: интегралы плотности по
    четырём областям за порогом, вычисленные через перекрытия волновых функций.
    """
    numerator, retained = _analytic_terms(model, threshold, np.array([delta_theta]))
    if retained[0] < MIN_RETAINED_PROBABILITY:
        raise ThresholdTooHighError(threshold, float(retained[0]))
    return float(numerator[0] / retained[0])


def analytic_curve(model: ModelSpec, threshold: float) -> Tuple[float, float, float]:
    """Амплитуда, фаза и средняя доля отобранных событий для модели"""
    deltas = TWO_PI * np.arange(ANALYTIC_FIT_POINTS) / ANALYTIC_FIT_POINTS
    numerators, retained = _analytic_terms(model, threshold, deltas)
    if np.min(retained) < MIN_RETAINED_PROBABILITY:
        raise ThresholdTooHighError(threshold, float(np.min(retained)))
    design = np.column_stack([np.cos(deltas), np.sin(deltas)])
    amplitude, _, offset, _ = _fit_cosine(design, numerators / retained, None)
    return amplitude, offset, float(np.mean(retained))


def analytic_amplitude(model: ModelSpec, threshold: float) -> float:
    return analytic_curve(model, threshold)[0]


def threshold_sweep(
    source: Union[SampleBatch, ModelSpec],
    thresholds: Sequence[float],
    config: Optional[BellConfig] = None,
) -> List[SweepRow]:
    """V, доля отобранных событий и флаг нарушения для каждого порога"""
    config = config or BellConfig()
    rows = []
    for threshold in thresholds:
        _check_threshold(threshold)
        if isinstance(source, ModelSpec):
            amplitude, _, fraction = analytic_curve(source, threshold)
            sigma = None
        else:
            curve = correlation_curve(source, config.model_copy(update={"threshold": threshold}))
            amplitude, sigma, fraction = (
                curve.amplitude,
                curve.sigma_amplitude,
                curve.retained_fraction,
            )
        logger.debug(f"Threshold {threshold}: V={amplitude:.4f} retained={fraction:.4f}")
        rows.append(
            SweepRow(
                threshold=float(threshold),
                amplitude=amplitude,
                sigma_amplitude=sigma,
                retained_fraction=fraction,
                violation=amplitude > BELL_BOUND,
            )
        )
    return rows


def chsh_s_value(curve: BellCurve) -> float:
    """
    S по подогнанной кривой E(δθ) = -V cos(δθ - φ0) для углов
    a ∈ {0, π/2}, b ∈ {π/4, 3π/4} относительно φ0; S = 2√2 V.
    """

    def correlation(a: float, b: float) -> float:
        return -curve.amplitude * math.cos(a - b)

    a1, a2 = 0.0, math.pi / 2
    b1, b2 = math.pi / 4, 3 * math.pi / 4
    return abs(
        correlation(a1, b1) - correlation(a1, b2) + correlation(a2, b1) + correlation(a2, b2)
    )


def bootstrap_amplitude(
    samples: SampleBatch, config: BellConfig, n_resamples: int, seed: int
) -> float:
    """Стандартное отклонение V по бутстрэп-выборкам"""
    rng = make_rng(seed)
    amplitudes = []
    for _ in range(n_resamples):
        index = rng.integers(0, len(samples), size=len(samples))
        amplitudes.append(correlation_curve(samples[index], config).amplitude)
    return float(np.std(amplitudes, ddof=1)) if len(amplitudes) > 1 else 0.0


def summarize(
    curve: BellCurve,
    model: Optional[ModelSpec] = None,
    bootstrap_sigma: Optional[float] = None,
) -> BellSummary:
    """Сводка: V, S, значимость нарушения и аналитические амплитуды модели"""
    significance = (
        (curve.amplitude - BELL_BOUND) / curve.sigma_amplitude
        if curve.sigma_amplitude > 0
        else 0.0
    )
    corrected = raw = None
    if model is not None:
        corrected = analytic_amplitude(model.corrected(), curve.threshold)
        raw = analytic_amplitude(model, curve.threshold)
    return BellSummary(
        threshold=curve.threshold,
        amplitude=curve.amplitude,
        sigma_amplitude=curve.sigma_amplitude,
        s_value=chsh_s_value(curve),
        retained_fraction=curve.retained_fraction,
        violation=curve.amplitude > BELL_BOUND,
        significance=significance,
        bootstrap_sigma=bootstrap_sigma,
        analytic_amplitude_corrected=corrected,
        analytic_amplitude_raw=raw,
    )
