"""
Командная строка: simulate, reconstruct, wigner, bell, pipeline.

Запуск: python -m app.cli <команда> [флаги]
Коды выхода: 0 - успех, 1 - ошибка валидации, 2 - ошибка выполнения,
3 - реконструкция не сошлась.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

from pydantic import ValidationError

from app.core.config import settings
from app.core.exceptions import (
    EXIT_NOT_CONVERGED,
    EXIT_OK,
    EXIT_RUNTIME,
    EXIT_VALIDATION,
    AppException,
    StorageError,
)
from app.core.logging import setup_logging
from app.schemas.pipeline import PipelineConfig
from app.schemas.wigner import WignerPlane
from app.services import pipeline, storage

logger = logging.getLogger(__name__)


class CliParser(argparse.ArgumentParser):
    """Ошибки использования завершаются кодом валидации"""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_VALIDATION, f"{self.prog}: error: {message}\n")


def _non_negative(value: str) -> float:
    number = float(value)
    if number < 0:
        raise argparse.ArgumentTypeError(f"ожидается T >= 0, получено {value}")
    return number


def build_parser() -> argparse.ArgumentParser:
    parser = CliParser(prog="dualrail", description="Гомодинная томография дуального кубита")
    parser.add_argument(
        "--log-level", default=None, help=f"уровень логирования (по умолчанию {settings.LOG_LEVEL})"
    )
    sub = parser.add_subparsers(dest="command", required=True, parser_class=CliParser)

    def common(p: argparse.ArgumentParser, out_default: str) -> None:
        p.add_argument("--config", type=Path, help="JSON конфигурация конвейера")
        p.add_argument("--out", type=Path, default=None, help=f"директория ({out_default})")
        p.add_argument("--threads", type=int, default=None, help="максимум рабочих потоков")

    p = sub.add_parser("simulate", help="синтетический прогон -> samples.csv")
    common(p, "<output_dir>/simulate")
    p.add_argument("--seed", type=int, default=None, help="сид генератора")
    p.add_argument("--n-samples", type=int, default=None, help="число пар (X_A, X_B)")
    p.add_argument(
        "--histograms", action="store_true", help="также записать гистограммы и ковариации"
    )

    p = sub.add_parser("reconstruct", help="MaxLik реконструкция по samples.csv")
    p.add_argument("samples", type=Path, help="CSV выборки")
    common(p, "<output_dir>/reconstruct")

    p = sub.add_parser("wigner", help="сечения функции Вигнера состояния")
    p.add_argument("state", type=Path, help="state.json")
    common(p, "<output_dir>/wigner")
    p.add_argument(
        "--plane",
        action="append",
        choices=[plane.value for plane in WignerPlane],
        help="сечение (можно повторять; по умолчанию все)",
    )

    p = sub.add_parser("bell", help="корреляции E_AB(δθ) и амплитуда")
    p.add_argument("samples", type=Path, help="CSV выборки")
    common(p, "<output_dir>/bell")
    p.add_argument("--threshold", type=float, default=None, help="порог T (>= 0)")
    p.add_argument(
        "--sweep", type=_non_negative, nargs="+", default=None, help="список порогов T"
    )
    p.add_argument("--seed", type=int, default=None, help="сид бутстрэпа")
    p.add_argument("--bootstrap", type=int, default=None, help="число бутстрэп-выборок")

    p = sub.add_parser("pipeline", help="все стадии по одной конфигурации")
    common(p, "<output_dir>")
    p.add_argument("--seed", type=int, default=None, help="сид генератора")
    return parser


def load_config(path: Optional[Path], **overrides) -> PipelineConfig:
    """Конфигурация из файла (или по умолчанию) с приоритетом флагов"""
    if path is None:
        config = PipelineConfig()
    else:
        if not path.exists():
            raise StorageError(str(path), "файл конфигурации не найден")
        config = PipelineConfig.model_validate_json(path.read_text(encoding="utf-8"))
    return config.with_overrides(**overrides)


def _out(args: argparse.Namespace, config: PipelineConfig, stage: str) -> Path:
    if args.out is not None:
        return args.out
    return Path(config.output_dir) / stage


def _threads(args: argparse.Namespace) -> int:
    return max(1, args.threads or settings.DEFAULT_THREADS)


def cmd_simulate(args: argparse.Namespace) -> int:
    config = load_config(
        args.config, **{"run.rng_seed": args.seed, "run.n_samples": args.n_samples}
    )
    edges = config.histogram_edges if args.histograms else None
    out = _out(args, config, "simulate")
    samples, path = pipeline.simulate_stage(config.run, out, _threads(args), edges)
    print(f"Samples: {len(samples)} -> {path} (seed={config.run.rng_seed})")
    return EXIT_OK


def cmd_reconstruct(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    samples = storage.read_samples(args.samples)
    model = config.model if args.config is not None else None
    state, result = pipeline.reconstruct_stage(
        samples, config.recon, _out(args, config, "reconstruct"), model, _threads(args)
    )
    diag = result.diagnostics
    print(f"Iterations: {diag.iterations}, converged: {diag.converged}")
    print(f"log L = {diag.log_likelihood:.10g}")
    print(f"rho_0000 = {state.elements[0, 0, 0, 0].real:.6f}")
    print(f"eta = {result.efficiency.eta:.6f}, tau^2 = {result.efficiency.tau_squared:.6f}")
    if result.fidelity is not None:
        print(f"fidelity = {result.fidelity:.6f}")
    return EXIT_OK if diag.converged else EXIT_NOT_CONVERGED


def cmd_wigner(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    state = pipeline.load_state(args.state)
    planes = [WignerPlane(p) for p in args.plane] if args.plane else config.wigner_planes
    origin = pipeline.wigner_stage(
        state,
        planes,
        _out(args, config, "wigner"),
        config.wigner_lo,
        config.wigner_hi,
        config.wigner_step,
        _threads(args),
    )
    print(f"W(0,0,0,0) = {origin:.8f}")
    print(f"Planes: {', '.join(p.value for p in planes)}")
    return EXIT_OK


def cmd_bell(args: argparse.Namespace) -> int:
    config = load_config(
        args.config,
        **{"bell.threshold": args.threshold, "bell.bootstrap_resamples": args.bootstrap},
    )
    samples = storage.read_samples(args.samples)
    model = config.model if args.config is not None else None
    seed = args.seed if args.seed is not None else config.run.rng_seed
    summary = pipeline.bell_stage(
        samples,
        config.bell,
        _out(args, config, "bell"),
        args.sweep or (),
        model,
        seed,
    )
    print(f"T = {summary.threshold}")
    print(f"V = {summary.amplitude:.4f} ± {summary.sigma_amplitude:.4f}")
    print(f"S = {summary.s_value:.4f}")
    print(f"retained_fraction = {summary.retained_fraction:.5f}")
    print(f"violation: {summary.violation} ({summary.significance:.1f} sigma)")
    return EXIT_OK


def cmd_pipeline(args: argparse.Namespace) -> int:
    out = str(args.out) if args.out is not None else None
    config = load_config(args.config, **{"run.rng_seed": args.seed, "output_dir": out})
    reports = pipeline.run_pipeline(config, _threads(args))
    failed, not_converged = False, False
    for report in reports:
        for stage in report.stages:
            status = "ok" if stage.ok else "FAILED"
            print(f"[tau^2={report.tau_squared:g}] {stage.name}: {status} {stage.details}")
            if stage.ok:
                continue
            if stage.name == "reconstruct" and not stage.details.get("converged", True):
                not_converged = True
            else:
                failed = True
    if failed:
        return EXIT_RUNTIME
    return EXIT_NOT_CONVERGED if not_converged else EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "reconstruct": cmd_reconstruct,
    "wigner": cmd_wigner,
    "bell": cmd_bell,
    "pipeline": cmd_pipeline,
}


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(args.log_level)
    try:
        return COMMANDS[args.command](args)
    except ValidationError as e:
        for error in e.errors():
            field = ".".join(str(part) for part in error["loc"])
            print(f"Validation error: {field}: {error['msg']}", file=sys.stderr)
        return EXIT_VALIDATION
    except AppException as e:
        logger.error(f"{e.code}: {e.message} {e.details}")
        print(f"Error [{e.code}]: {e.message}", file=sys.stderr)
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
