"""
Функция Вигнера двухмодового состояния в базисе Фока.

Нормировка ∫W dx dp = 1, дисперсия вакуума 1/2: W_00 = e^(-x²-p²)/π.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Dict, Iterable, Optional, Tuple, Union

import numpy as np

from app.core.exceptions import NumericalConsistencyError, ParameterError, PreconditionError
from app.models.state import SingleModeDensityMatrix, TwoModeDensityMatrix
from app.models.wigner import WignerGrid
from app.schemas.state import ModelSpec
from app.schemas.wigner import COORDINATES, GridSpec, PhasePoint4, WignerPlane
from app.services import storage
from app.services.fock import make_input_state, make_true_state

logger = logging.getLogger(__name__)

IMAG_TOL = 1e-10

ArrayLike = Union[float, np.ndarray]


def laguerre(n: int, alpha: int, x: np.ndarray) -> np.ndarray:
    """Присоединённые полиномы Лагерра L_n^alpha(x) по рекурсии"""
    x = np.asarray(x, dtype=np.float64)
    prev = np.ones_like(x)
    if n == 0:
        return prev
    cur = 1.0 + alpha - x
    for k in range(1, n):
        prev, cur = cur, ((2 * k + 1 + alpha - x) * cur - (k + alpha) * prev) / (k + 1)
    return cur


def wigner_kernels(n_max: int, x: ArrayLike, p: ArrayLike) -> np.ndarray:
    """
    W_mn(x, p) - функция Вигнера оператора |m><n|, массив (d, d, *shape).

    При m >= n: e^(-r²)/π (-1)^n (x - ip)^(m-n) sqrt(2^(m-n) n!/m!) L_n^(m-n)(2r²),
    при m < n: W_mn = conj(W_nm).
    """
    x, p = np.broadcast_arrays(np.asarray(x, dtype=np.float64), np.asarray(p, dtype=np.float64))
    d = n_max + 1
    r2 = x**2 + p**2
    z = x - 1j * p
    prefactor = np.exp(-r2) / math.pi
    out = np.empty((d, d) + x.shape, dtype=np.complex128)
    for m in range(d):
        for n in range(m + 1):
            k = m - n
            norm = math.sqrt(2.0**k * math.factorial(n) / math.factorial(m))
            value = (-1) ** n * norm * prefactor * z**k * laguerre(n, k, 2.0 * r2)
            out[m, n] = value
            out[n, m] = np.conj(value)
    return out


def wigner_mn(m: int, n: int, x: float, p: float) -> complex:
    if m < 0 or n < 0:
        raise ParameterError("m, n", (m, n), ">= 0")
    return complex(wigner_kernels(max(m, n), x, p)[m, n])


def single_mode_wigner(state: SingleModeDensityMatrix, x: ArrayLike, p: ArrayLike) -> ArrayLike:
    kernels = wigner_kernels(state.cutoff.n_max, x, p)
    values = np.einsum("km,km...->...", state.elements, kernels)
    return _real_part(values)


def _real_part(values: np.ndarray) -> ArrayLike:
    residue = float(np.max(np.abs(values.imag))) if values.size else 0.0
    if residue > IMAG_TOL:
        raise NumericalConsistencyError(
            "Мнимая часть функции Вигнера превышает допуск", {"imag_residue": residue}
        )
    real = np.asarray(values.real)
    return float(real) if real.ndim == 0 else real


def wigner_values(
    state: TwoModeDensityMatrix, x_a: ArrayLike, p_a: ArrayLike, x_b: ArrayLike, p_b: ArrayLike
) -> ArrayLike:
    """Σ ρ_klmn W_km(x_a, p_a) W_ln(x_b, p_b) в наборе точек"""
    arrays = np.broadcast_arrays(*(np.asarray(v, dtype=np.float64) for v in (x_a, p_a, x_b, p_b)))
    shape = arrays[0].shape
    flat = [a.reshape(-1) for a in arrays]
    n_max = state.cutoff.n_max
    w_a = wigner_kernels(n_max, flat[0], flat[1])
    w_b = wigner_kernels(n_max, flat[2], flat[3])
    values = np.einsum("klmn,kmN,lnN->N", state.elements, w_a, w_b).reshape(shape)
    return _real_part(values)


def two_mode_wigner(state: TwoModeDensityMatrix, pt: PhasePoint4) -> float:
    return float(wigner_values(state, pt.x_a, pt.p_a, pt.x_b, pt.p_b))


def axis_values(spec: GridSpec) -> np.ndarray:
    return spec.lo + spec.step * np.arange(spec.n_points)


def cross_section(
    state: TwoModeDensityMatrix,
    plane: Union[WignerPlane, GridSpec],
    lo: float = -3.0,
    hi: float = 3.0,
    step: float = 0.05,
    fixed: Optional[Dict[str, float]] = None,
    threads: int = 1,
) -> WignerGrid:
    """Сетка значений W в одном из сечений; строки считаются независимо"""
    spec = (
        plane
        if isinstance(plane, GridSpec)
        else GridSpec(plane=plane, lo=lo, hi=hi, step=step, fixed=fixed or {})
    )
    axis = axis_values(spec)
    x_name, y_name = spec.plane.axes
    coords = {name: spec.fixed.get(name, 0.0) for name in COORDINATES}

    def row(y: float) -> np.ndarray:
        point = dict(coords)
        point[x_name] = axis
        point[y_name] = y
        return wigner_values(state, point["x_a"], point["p_a"], point["x_b"], point["p_b"])

    logger.debug(f"Wigner cross-section {spec.plane.value}: {len(axis)}x{len(axis)} points")
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(row, axis))
    else:
        rows = [row(y) for y in axis]
    fixed_out = {k: v for k, v in coords.items() if k not in (x_name, y_name)}
    return WignerGrid(plane=spec.plane, x=axis, y=axis, fixed=fixed_out, values=np.stack(rows))


def rotate_point(pt: PhasePoint4, tau: float, rho: float) -> Tuple[PhasePoint4, PhasePoint4]:
    """Координаты входных мод (сигнальной и вакуумной) для точки выходного пространства"""
    signal = PhasePoint4(x_a=tau * pt.x_a - rho * pt.x_b, p_a=tau * pt.p_a - rho * pt.p_b)
    vacuum = PhasePoint4(x_a=rho * pt.x_a + tau * pt.x_b, p_a=rho * pt.p_a + tau * pt.p_b)
    return signal, vacuum


def rotation_check(model: ModelSpec, pts: Iterable[PhasePoint4]) -> float:
    """
    max |W_out(pt) - W_in(точка после поворота) W_vac(...)| по точкам.
    W_out считается через U ρ U† в базисе Фока, правая часть - независимо.
    """
    if model.eta_det != 1.0:
        raise PreconditionError(
            "Проверка поворота требует модели без потерь детектирования",
            {"eta_det": model.eta_det},
        )
    state = make_true_state(model, include_detection_loss=False)
    rho_in = make_input_state(model.eta_prep, model.cutoff)
    bs = model.bs
    worst = 0.0
    for pt in pts:
        signal, vacuum = rotate_point(pt, bs.tau, bs.rho)
        expected = single_mode_wigner(rho_in, signal.x_a, signal.p_a) * (
            math.exp(-(vacuum.x_a**2 + vacuum.p_a**2)) / math.pi
        )
        worst = max(worst, abs(two_mode_wigner(state, pt) - expected))
    return worst


def write_grid(grid: WignerGrid, out_dir: Union[str, Path], origin_value: Optional[float] = None):
    """CSV матрица значений и JSON описание осей"""
    out_dir = storage.make_run_dir(out_dir)
    stem = f"wigner_{grid.plane.value}"
    csv_path = storage.write_matrix_csv(out_dir / f"{stem}.csv", grid.values)
    json_path = storage.write_json(out_dir / f"{stem}.json", grid.axes(origin_value))
    return csv_path, json_path
