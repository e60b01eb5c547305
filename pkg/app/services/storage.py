"""
Storage service: CSV выборок, JSON документы, таблицы и кэш POVM
"""

import csv
import hashlib
import json
import logging
import math
from pathlib import Path
from typing import Any, Iterable, List, Optional, Sequence, Union

import numpy as np

from app.core.config import settings
from app.core.exceptions import SampleFormatError, StorageError
from app.models.povm import PovmSet
from app.models.sample import SampleBatch
from app.schemas.state import FockCutoff

logger = logging.getLogger(__name__)

SAMPLE_HEADER = ["delta_theta", "x_a", "x_b"]

PathLike = Union[str, Path]


def _format_float(value: float) -> str:
    # десятичная запись, которая при разборе даёт тот же double
    return np.format_float_positional(value, unique=True, trim="-", min_digits=12)


def make_run_dir(root: PathLike, stage: Optional[str] = None) -> Path:
    """Создание директории для артефактов"""
    path = Path(root) / stage if stage else Path(root)
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise StorageError(str(path), f"не удалось создать директорию: {e}")
    return path


def _open_for_write(path: PathLike):
    path = Path(path)
    make_run_dir(path.parent)
    try:
        return open(path, "w", newline="", encoding="utf-8")
    except OSError as e:
        raise StorageError(str(path), f"запись невозможна: {e}")


def write_samples(samples: SampleBatch, path: PathLike) -> Path:
    """CSV с заголовком delta_theta,x_a,x_b"""
    with _open_for_write(path) as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(SAMPLE_HEADER)
        for row in zip(samples.delta_theta, samples.x_a, samples.x_b):
            writer.writerow([_format_float(v) for v in row])
    logger.info(f"Wrote {len(samples)} samples to {path}")
    return Path(path)


def read_samples(path: PathLike) -> SampleBatch:
    """Чтение CSV выборок; ошибки формата указывают номер строки"""
    path = Path(path)
    if not path.exists():
        raise StorageError(str(path), "файл не найден")
    columns: List[List[float]] = [[], [], []]
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != SAMPLE_HEADER:
            raise SampleFormatError(str(path), 1, f"ожидается заголовок {','.join(SAMPLE_HEADER)}")
        for row in reader:
            line = reader.line_num
            if not row:
                continue
            if len(row) != 3:
                raise SampleFormatError(str(path), line, f"ожидается 3 столбца, найдено {len(row)}")
            try:
                values = [float(v) for v in row]
            except ValueError:
                raise SampleFormatError(str(path), line, f"не число: {row}")
            if not all(math.isfinite(v) for v in values):
                raise SampleFormatError(str(path), line, "значение не конечно")
            if not 0.0 <= values[0] < 2.0 * math.pi:
                raise SampleFormatError(str(path), line, f"delta_theta={values[0]} вне [0, 2π)")
            for col, v in zip(columns, values):
                col.append(v)
    return SampleBatch(
        delta_theta=np.array(columns[0], dtype=np.float64),
        x_a=np.array(columns[1], dtype=np.float64),
        x_b=np.array(columns[2], dtype=np.float64),
    )


def _jsonable(value: Any) -> Any:
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (np.floating, np.integer, np.bool_)):
        return value.item()
    if hasattr(value, "model_dump"):
        return value.model_dump(mode="json")
    raise TypeError(f"Not JSON serializable: {type(value)!r}")


def write_json(path: PathLike, payload: Any) -> Path:
    if hasattr(payload, "model_dump"):
        payload = payload.model_dump(mode="json")
    with _open_for_write(path) as f:
        json.dump(payload, f, indent=2, sort_keys=True, allow_nan=False, default=_jsonable)
        f.write("\n")
    return Path(path)


def read_json(path: PathLike) -> Any:
    path = Path(path)
    if not path.exists():
        raise StorageError(str(path), "файл не найден")
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise StorageError(str(path), f"некорректный JSON: {e}")


def write_table(path: PathLike, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    """CSV таблица для построения графиков"""
    with _open_for_write(path) as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow(
                [_format_float(v) if isinstance(v, (float, np.floating)) else v for v in row]
            )
    return Path(path)


def write_matrix_csv(path: PathLike, values: np.ndarray) -> Path:
    """Числовая матрица без заголовка (строки - ось y, столбцы - ось x)"""
    with _open_for_write(path) as f:
        writer = csv.writer(f, lineterminator="\n")
        for row in np.asarray(values, dtype=np.float64):
            writer.writerow([_format_float(v) for v in row])
    return Path(path)


# POVM cache


def povm_cache_key(
    n_max: int,
    eta_det: float,
    quad_edges: np.ndarray,
    phase_edges: np.ndarray,
    bin_averaged: bool,
) -> str:
    digest = hashlib.sha256()
    digest.update(f"n_max={n_max};eta_det={eta_det!r};avg={bin_averaged};".encode())
    digest.update(np.ascontiguousarray(quad_edges, dtype=np.float64).tobytes())
    digest.update(np.ascontiguousarray(phase_edges, dtype=np.float64).tobytes())
    return digest.hexdigest()


def _cache_path(key: str) -> Path:
    return Path(settings.POVM_CACHE_DIR) / f"povm_{key}.npz"


def save_povm(key: str, povm: PovmSet) -> Optional[Path]:
    path = _cache_path(key)
    try:
        make_run_dir(path.parent)
        tmp = path.with_suffix(".tmp.npz")
        np.savez(
            tmp,
            phase_edges=povm.phase_edges,
            quad_edges=povm.quad_edges,
            mode_a=povm.mode_a,
            mode_b=povm.mode_b,
        )
        tmp.replace(path)
    except (OSError, StorageError) as e:
        logger.warning(f"POVM cache write failed, continuing without cache: {e}")
        return None
    return path


def load_povm(
    key: str, cutoff: FockCutoff, eta_det: float, bin_averaged: bool
) -> Optional[PovmSet]:
    path = _cache_path(key)
    if not path.exists():
        return None
    try:
        with np.load(path) as data:
            arrays = {name: np.array(data[name]) for name in data.files}
    except (OSError, ValueError, KeyError) as e:
        logger.warning(f"POVM cache entry {path} unreadable, rebuilding: {e}")
        return None
    return PovmSet(
        cutoff=cutoff,
        eta_det=eta_det,
        phase_edges=arrays["phase_edges"],
        quad_edges=arrays["quad_edges"],
        mode_a=arrays["mode_a"],
        mode_b=arrays["mode_b"],
        bin_averaged=bin_averaged,
    )
