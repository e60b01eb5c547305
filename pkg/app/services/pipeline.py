"""
Стадии конвейера и их артефакты: simulate -> reconstruct -> wigner -> bell.

Каждая стадия пишет таблицы в свою директорию; случайность берётся из одного
сида конфигурации, стадии получают независимые подпотоки по имени.
"""

import logging
import math
from datetime import datetime
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from app.core.exceptions import AppException
from app.models.sample import SampleBatch
from app.models.state import TwoModeDensityMatrix
from app.schemas.bell import BellConfig, BellCurve, BellSummary
from app.schemas.homodyne import TWO_PI
from app.schemas.pipeline import PipelineConfig, PipelineReport, StageReport
from app.schemas.recon import ReconConfig, ReconResult
from app.schemas.run import RunConfig, SampleManifest
from app.schemas.state import ModelSpec, StateDocument
from app.schemas.wigner import GridSpec, PhasePoint4, WignerPlane
from app.services import bell, maxlik, sampler, storage, wigner
from app.services.fock import apply_loss, fidelity, make_true_state
from app.services.homodyne import expected_covariance

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

HISTOGRAM_PHASES = {"0": 0.0, "pi_2": math.pi / 2, "pi": math.pi}
HISTOGRAM_WIDTH = TWO_PI / 12
COVARIANCE_BINS = 12
# допуск калибровки дробового шума в стандартных отклонениях
CALIBRATION_SIGMAS = 4.0
WIGNER_ORIGIN_TOL = 1e-10
ROTATION_TOL = 1e-8
ROTATION_POINTS = tuple(
    PhasePoint4(x_a=xa, p_a=pa, x_b=xb, p_b=pb)
    for xa, pa, xb, pb in ((0.0, 0.0, 0.0, 0.0), (0.7, -0.2, 0.4, 1.1), (-1.3, 0.5, 0.9, -0.6))
)


# simulate


def write_histograms(samples: SampleBatch, edges: Sequence[float], out_dir: Path) -> None:
    """Двумерные гистограммы при δθ ∈ {0, π/2, π} и маргиналы обеих мод"""
    for name, delta in HISTOGRAM_PHASES.items():
        density, _ = sampler.histogram_2d(samples, delta, HISTOGRAM_WIDTH, edges)
        storage.write_matrix_csv(out_dir / f"hist2d_{name}.csv", density)
    hist_a, hist_b = sampler.marginal_histograms(samples, edges)
    rows = zip(edges[:-1], edges[1:], hist_a, hist_b)
    storage.write_table(
        out_dir / "marginals.csv", ["lo", "hi", "density_a", "density_b"], rows
    )


def write_covariance(samples: SampleBatch, model: ModelSpec, out_dir: Path) -> List[dict]:
    rows = sampler.covariance_by_phase(samples, COVARIANCE_BINS)
    table = [
        (
            r["delta_theta"],
            "" if r["cov"] is None else r["cov"],
            "" if r["stderr"] is None else r["stderr"],
            expected_covariance(model, r["delta_theta"]),
            r["n"],
        )
        for r in rows
    ]
    storage.write_table(
        out_dir / "covariance.csv", ["delta_theta", "cov", "stderr", "expected", "n"], table
    )
    return rows


def simulate_stage(
    run: RunConfig,
    out_dir: PathLike,
    threads: Optional[int] = None,
    histogram_edges: Optional[Sequence[float]] = None,
) -> Tuple[SampleBatch, Path]:
    """Выборка, манифест и (опционально) гистограммы"""
    out_dir = storage.make_run_dir(out_dir)
    samples = sampler.sample_run(run, threads=threads)
    path = storage.write_samples(samples, out_dir / "samples.csv")
    manifest = SampleManifest(
        seed=run.rng_seed,
        model=run.model,
        n_samples=len(samples),
        phase_schedule=run.phase_schedule,
        fixed_delta_theta=run.fixed_delta_theta,
        samples_file=path.name,
        created_at=datetime.now().isoformat(timespec="seconds"),
    )
    storage.write_json(out_dir / "manifest.json", manifest)
    if histogram_edges is not None:
        write_histograms(samples, histogram_edges, out_dir)
        write_covariance(samples, run.model, out_dir)
    return samples, path


def calibrate_vacuum(n: int, seed: int) -> Dict[str, float]:
    """Дисперсии вакуумных пар и их отклонение от 1/2 в стандартных ошибках"""
    vac = sampler.sample_vacuum(n, seed)
    sigma = 0.5 * math.sqrt(2.0 / (n - 1))
    var_a = float(np.var(vac.x_a, ddof=1))
    var_b = float(np.var(vac.x_b, ddof=1))
    return {
        "var_a": var_a,
        "var_b": var_b,
        "deviation_sigmas": max(abs(var_a - 0.5), abs(var_b - 0.5)) / sigma,
    }


# reconstruct


def ground_truth(model: ModelSpec, eta_corrected: float) -> TwoModeDensityMatrix:
    """Состояние, которое должна дать реконструкция с поправкой на eta_corrected"""
    state = make_true_state(model, include_detection_loss=False)
    residual = model.eta_det / eta_corrected
    if residual < 1.0:
        state = apply_loss(state, residual, "both")
    return state


def reconstruct_stage(
    samples: SampleBatch,
    recon: ReconConfig,
    out_dir: PathLike,
    model: Optional[ModelSpec] = None,
    threads: int = 1,
) -> Tuple[TwoModeDensityMatrix, ReconResult]:
    out_dir = storage.make_run_dir(out_dir)
    hist = maxlik.bin_data(samples, recon)
    state, diagnostics = maxlik.reconstruct(hist, recon, threads=threads)
    efficiency = maxlik.effective_efficiency(state)
    fid = None
    if model is not None and model.n_max == recon.n_max:
        fid = fidelity(state, ground_truth(model, recon.eta_det))
    result = ReconResult(
        state=state.to_document(),
        diagnostics=diagnostics,
        efficiency=efficiency,
        config=recon,
        fidelity=fid,
    )
    storage.write_json(out_dir / "state.json", result)
    storage.write_matrix_csv(out_dir / "rho_abs.csv", np.abs(state.as_matrix()))
    return state, result


def load_state(path: PathLike) -> TwoModeDensityMatrix:
    """Состояние из state.json (результат реконструкции или чистый документ)"""
    payload = storage.read_json(path)
    if isinstance(payload, dict) and "state" in payload:
        payload = payload["state"]
    return TwoModeDensityMatrix.from_document(StateDocument.model_validate(payload))


# wigner


def wigner_stage(
    state: TwoModeDensityMatrix,
    planes: Sequence[WignerPlane],
    out_dir: PathLike,
    lo: float = -3.0,
    hi: float = 3.0,
    step: float = 0.05,
    threads: int = 1,
) -> float:
    """Сечения W для выбранных плоскостей; возвращает W(0,0,0,0)"""
    out_dir = storage.make_run_dir(out_dir)
    origin = wigner.two_mode_wigner(state, PhasePoint4())
    for plane in planes:
        grid = wigner.cross_section(
            state, GridSpec(plane=plane, lo=lo, hi=hi, step=step), threads=threads
        )
        wigner.write_grid(grid, out_dir, origin_value=origin)
    return origin


# bell


def write_curve(curve: BellCurve, path: Path) -> Path:
    rows = [
        (
            b.phase_bin,
            b.delta_theta,
            "" if b.correlation is None else b.correlation,
            "" if b.stderr is None else b.stderr,
            b.retained,
            b.total,
            int(b.flagged),
        )
        for b in curve.bins
    ]
    header = ["phase_bin", "delta_theta", "E", "stderr", "retained", "total", "flagged"]
    return storage.write_table(path, header, rows)


def bell_stage(
    samples: SampleBatch,
    config: BellConfig,
    out_dir: PathLike,
    thresholds: Sequence[float] = (),
    model: Optional[ModelSpec] = None,
    seed: int = 0,
) -> BellSummary:
    out_dir = storage.make_run_dir(out_dir)
    curve = bell.correlation_curve(samples, config)
    boot = None
    if config.bootstrap_resamples > 0:
        boot = bell.bootstrap_amplitude(samples, config, config.bootstrap_resamples, seed)
    summary = bell.summarize(curve, model, boot)
    write_curve(curve, out_dir / "bell_curve.csv")
    storage.write_json(out_dir / "bell_summary.json", summary)

    if thresholds:
        rows = bell.threshold_sweep(samples, thresholds, config)
        storage.write_table(
            out_dir / "sweep.csv",
            ["threshold", "amplitude", "sigma_amplitude", "retained_fraction", "violation"],
            [
                (r.threshold, r.amplitude, r.sigma_amplitude, r.retained_fraction, int(r.violation))
                for r in rows
            ],
        )
        if model is not None:
            write_model_sweep(model, thresholds, out_dir / "sweep_model.csv")
    return summary


def write_model_sweep(model: ModelSpec, thresholds: Sequence[float], path: Path) -> Path:
    """Аналитические амплитуды с поправкой на η_det и без неё"""
    corrected = bell.threshold_sweep(model.corrected(), thresholds)
    raw = bell.threshold_sweep(model, thresholds)
    rows = [
        (c.threshold, c.amplitude, c.retained_fraction, r.amplitude, r.retained_fraction)
        for c, r in zip(corrected, raw)
    ]
    header = [
        "threshold",
        "amplitude_corrected",
        "retained_corrected",
        "amplitude_raw",
        "retained_raw",
    ]
    return storage.write_table(path, header, rows)


# pipeline


def _monotone(deltas: Sequence[float], scale: float) -> bool:
    return all(d >= -maxlik.MONOTONE_TOL * max(1.0, abs(scale)) for d in deltas)


def origin_from_parity(state: TwoModeDensityMatrix) -> float:
    """W(0,0,0,0) = <(-1)^(k+l)> / π²"""
    diag = np.einsum("klkl->kl", state.elements).real
    n_a, n_b = np.indices(diag.shape)
    return float(np.sum(diag * (-1.0) ** (n_a + n_b)) / math.pi**2)


def wigner_ok(state: TwoModeDensityMatrix, origin: float, model: ModelSpec) -> bool:
    """Значение в начале координат и поворот светоделителя в фазовом пространстве"""
    if abs(origin - origin_from_parity(state)) > WIGNER_ORIGIN_TOL:
        logger.warning(f"Wigner origin {origin:.6e} does not match photon-number parity")
        return False
    deviation = wigner.rotation_check(model.corrected(), ROTATION_POINTS)
    if deviation > ROTATION_TOL:
        logger.warning(f"Rotation check deviation {deviation:.3e}")
        return False
    return True


def bell_ok(summary: BellSummary) -> bool:
    values = (summary.amplitude, summary.sigma_amplitude, summary.retained_fraction)
    return all(math.isfinite(v) for v in values) and 0.0 <= summary.amplitude <= 1.0


def run_for_splitter(
    config: PipelineConfig, tau_squared: float, out_dir: Path, threads: int = 1
) -> PipelineReport:
    model = ModelSpec.model_validate({**config.model.model_dump(), "tau_squared": tau_squared})
    seed = config.run.rng_seed
    tag = f"tau2={tau_squared!r}"
    report = PipelineReport(tau_squared=tau_squared, output_dir=str(out_dir))
    storage.write_json(out_dir / "config.json", config)

    run = config.run.model_copy(
        update={"model": model, "rng_seed": sampler.derive_seed(seed, f"simulate/{tag}")}
    )
    samples, _ = simulate_stage(run, out_dir / "simulate", threads, config.histogram_edges)
    calibration = calibrate_vacuum(
        config.vacuum_samples, sampler.derive_seed(seed, f"vacuum/{tag}")
    )
    report.stages.append(
        StageReport(
            name="simulate",
            ok=calibration["deviation_sigmas"] < CALIBRATION_SIGMAS,
            details={"n_samples": len(samples), **calibration},
        )
    )

    state, result = reconstruct_stage(
        samples, config.recon, out_dir / "reconstruct", model, threads
    )
    diag = result.diagnostics
    sector_leak = float(np.max(np.abs(state.elements[~state.sector_mask()]), initial=0.0))
    state_ok = True
    try:
        state.check()
    except AppException:
        state_ok = False
    report.stages.append(
        StageReport(
            name="reconstruct",
            ok=diag.converged
            and state_ok
            and sector_leak == 0.0
            and _monotone(diag.deltas, diag.log_likelihood),
            details={
                "converged": diag.converged,
                "iterations": diag.iterations,
                "eta": result.efficiency.eta,
                "tau_squared": result.efficiency.tau_squared,
                "fidelity": result.fidelity,
            },
        )
    )

    origin = wigner_stage(
        state,
        config.wigner_planes,
        out_dir / "wigner",
        config.wigner_lo,
        config.wigner_hi,
        config.wigner_step,
        threads,
    )
    report.stages.append(
        StageReport(
            name="wigner",
            ok=wigner_ok(state, origin, model),
            details={"origin": origin, "origin_expected": origin_from_parity(state)},
        )
    )

    summary = bell_stage(
        samples,
        config.bell,
        out_dir / "bell",
        config.bell_thresholds,
        model,
        sampler.derive_seed(seed, f"bootstrap/{tag}"),
    )
    report.stages.append(
        StageReport(name="bell", ok=bell_ok(summary), details=summary.model_dump(mode="json"))
    )
    storage.write_json(out_dir / "report.json", report)
    return report


def run_pipeline(config: PipelineConfig, threads: int = 1) -> List[PipelineReport]:
    """Все стадии для каждого коэффициента пропускания из конфигурации"""
    root = storage.make_run_dir(config.output_dir)
    storage.write_json(root / "config.json", config)
    reports = []
    for tau_squared in config.transmissions_list:
        out_dir = storage.make_run_dir(root, f"tau2_{tau_squared:g}")
        logger.info(f"Pipeline for tau^2={tau_squared} -> {out_dir}")
        reports.append(run_for_splitter(config, tau_squared, out_dir, threads))
    return reports
