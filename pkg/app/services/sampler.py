"""
Синтетические прогоны: потоки (δθ, X_A, X_B) из точной совместной плотности,
калибровочный вакуум и гистограммы для просмотра данных.

Генератор: NumPy PCG64 (O'Neill, 128-битное состояние, 64-битный выход),
инициализируемый через SeedSequence. Шард i прогона с сидом s использует
SeedSequence([s, i]), поэтому поток не зависит от числа потоков исполнения.
"""

import logging
import math
import zlib
from concurrent.futures import ThreadPoolExecutor
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import cumulative_trapezoid

from app.core.config import settings
from app.models.sample import SampleBatch
from app.models.state import TwoModeDensityMatrix
from app.schemas.homodyne import TWO_PI
from app.schemas.run import PhaseSchedule, RunConfig
from app.services.fock import make_true_state, phase_average
from app.services.homodyne import hermite_functions

logger = logging.getLogger(__name__)

GRID_MIN = -6.0
GRID_MAX = 6.0
GRID_POINTS = 2001
DRAW_CHUNK = 2048


def make_rng(*entropy: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(list(entropy))))


def derive_seed(seed: int, stage: str) -> int:
    """Независимый сид для стадии конвейера: SeedSequence([seed, crc32(stage)])"""
    words = np.random.SeedSequence([seed, zlib.crc32(stage.encode())]).generate_state(
        1, np.uint64
    )
    return int(words[0])


class QuadratureSampler:
    """
    Табличное обратное преобразование: X_A из маргинала (не зависит от δθ),
    затем X_B из условной плотности pr(X_B | X_A, δθ).
    """

    def __init__(self, state: TwoModeDensityMatrix):
        self.rho = phase_average(state).elements
        self.n_max = state.cutoff.n_max
        self.grid = np.linspace(GRID_MIN, GRID_MAX, GRID_POINTS)
        h = hermite_functions(self.n_max, self.grid)

        rho_a = np.einsum("klml->km", self.rho)
        pdf_a = np.maximum(np.einsum("km,kG,mG->G", rho_a, h, h).real, 0.0)
        cdf_a = cumulative_trapezoid(pdf_a, self.grid, initial=0.0)
        self.cdf_a = np.maximum.accumulate(cdf_a / cdf_a[-1])

        d = self.n_max + 1
        products = h[:, None, :] * h[None, :, :]
        self.partial = cumulative_trapezoid(products, self.grid, axis=-1, initial=0.0).reshape(
            d * d, GRID_POINTS
        )

    def draw_a(self, u: np.ndarray) -> np.ndarray:
        return np.interp(u, self.cdf_a, self.grid)

    def draw_b(self, delta: np.ndarray, x_a: np.ndarray, u: np.ndarray) -> np.ndarray:
        out = np.empty_like(x_a)
        d = self.n_max + 1
        idx = np.arange(d)
        for start in range(0, len(x_a), DRAW_CHUNK):
            sl = slice(start, start + DRAW_CHUNK)
            ha = hermite_functions(self.n_max, x_a[sl]).T
            phi = np.exp(1j * (idx[None, :, None] - idx[None, None, :]) * delta[sl, None, None])
            kernel = phi * ha[:, :, None] * ha[:, None, :]
            coeffs = np.einsum("skm,klmn->sln", kernel, self.rho).real.reshape(-1, d * d)
            cdf = np.maximum.accumulate(coeffs @ self.partial, axis=1)
            target = u[sl] * cdf[:, -1]
            hi = np.clip((cdf < target[:, None]).sum(axis=1), 1, GRID_POINTS - 1)
            rows = np.arange(len(hi))
            c_lo, c_hi = cdf[rows, hi - 1], cdf[rows, hi]
            span = np.where(c_hi > c_lo, c_hi - c_lo, 1.0)
            frac = np.clip((target - c_lo) / span, 0.0, 1.0)
            out[sl] = self.grid[hi - 1] + frac * (self.grid[hi] - self.grid[hi - 1])
        return out


def _shard_phases(
    config: RunConfig, start: int, stop: int, rng: np.random.Generator
) -> np.ndarray:
    if config.phase_schedule == PhaseSchedule.SWEEP:
        return TWO_PI * np.arange(start, stop, dtype=np.float64) / config.n_samples
    if config.phase_schedule == PhaseSchedule.UNIFORM:
        phases = np.mod(rng.uniform(0.0, TWO_PI, size=stop - start), TWO_PI)
        return np.where(phases >= TWO_PI, 0.0, phases)
    return np.full(stop - start, config.fixed_delta_theta, dtype=np.float64)


def sample_run(config: RunConfig, threads: Optional[int] = None) -> SampleBatch:
    """Синтетический прогон из make_true_state(model, с потерями детектора)"""
    state = make_true_state(config.model, include_detection_loss=True)
    sampler = QuadratureSampler(state)
    shard = settings.SAMPLER_SHARD_SIZE
    n_shards = math.ceil(config.n_samples / shard)

    def run_shard(i: int) -> SampleBatch:
        start, stop = i * shard, min((i + 1) * shard, config.n_samples)
        rng = make_rng(config.rng_seed, i)
        phases = _shard_phases(config, start, stop, rng)
        u = rng.random((stop - start, 2))
        x_a = sampler.draw_a(u[:, 0])
        x_b = sampler.draw_b(phases, x_a, u[:, 1])
        logger.debug(f"Shard {i + 1}/{n_shards}: {stop - start} samples")
        return SampleBatch(delta_theta=phases, x_a=x_a, x_b=x_b)

    workers = max(1, threads or settings.DEFAULT_THREADS)
    logger.info(
        f"Sampling {config.n_samples} pairs ({config.phase_schedule.value}) "
        f"seed={config.rng_seed} threads={workers}"
    )
    if workers == 1:
        batches = [run_shard(i) for i in range(n_shards)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            batches = list(pool.map(run_shard, range(n_shards)))
    return SampleBatch.concatenate(batches)


def sample_vacuum(n: int, seed: int) -> SampleBatch:
    """Калибровка: независимые гауссовы пары с дисперсией 1/2"""
    rng = make_rng(seed)
    x = rng.normal(0.0, math.sqrt(0.5), size=(n, 2))
    phases = TWO_PI * np.arange(n, dtype=np.float64) / max(n, 1)
    return SampleBatch(delta_theta=phases, x_a=x[:, 0], x_b=x[:, 1])


def _phase_window(samples: SampleBatch, delta_theta: float, width: float) -> np.ndarray:
    offset = np.mod(samples.delta_theta - delta_theta + math.pi, TWO_PI) - math.pi
    return np.abs(offset) <= 0.5 * width


def histogram_2d(
    samples: SampleBatch, delta_theta: float, width: float, edges: Sequence[float]
) -> Tuple[np.ndarray, int]:
    """Двумерная гистограмма пар с фазой в окне δθ ± width/2; плотность и число пар"""
    mask = _phase_window(samples, delta_theta, width)
    counts, _, _ = np.histogram2d(samples.x_a[mask], samples.x_b[mask], bins=[edges, edges])
    total = int(mask.sum())
    area = np.outer(np.diff(edges), np.diff(edges))
    density = counts / (max(total, 1) * area)
    return density, total


def marginal_histograms(
    samples: SampleBatch, edges: Sequence[float]
) -> Tuple[np.ndarray, np.ndarray]:
    """Индивидуальные гистограммы (плотности) Алисы и Боба"""
    hist_a, _ = np.histogram(samples.x_a, bins=edges, density=True)
    hist_b, _ = np.histogram(samples.x_b, bins=edges, density=True)
    return hist_a, hist_b


def covariance_by_phase(samples: SampleBatch, n_bins: int) -> List[dict]:
    """Выборочная Cov(X_A, X_B) по фазовым бинам со стандартной ошибкой"""
    width = TWO_PI / n_bins
    index = np.minimum((samples.delta_theta / width).astype(int), n_bins - 1)
    rows = []
    for b in range(n_bins):
        mask = index == b
        n = int(mask.sum())
        if n < 2:
            rows.append({"delta_theta": (b + 0.5) * width, "cov": None, "stderr": None, "n": n})
            continue
        xa, xb = samples.x_a[mask], samples.x_b[mask]
        prod = (xa - xa.mean()) * (xb - xb.mean())
        rows.append(
            {
                "delta_theta": (b + 0.5) * width,
                "cov": float(prod.sum() / (n - 1)),
                "stderr": float(prod.std(ddof=1) / math.sqrt(n)),
                "n": n,
            }
        )
    return rows
