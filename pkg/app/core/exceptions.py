"""
Стандартизированная обработка ошибок

Формат: {"error": {"code": "...", "message": "...", "details": {...}}}
"""

import logging
from typing import Any, Dict, Optional, Union

from fastapi import Request, status
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import ValidationError

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2
EXIT_NOT_CONVERGED = 3


class AppException(Exception):
    """Базовое исключение"""

    status_code: int = status.HTTP_500_INTERNAL_SERVER_ERROR
    exit_code: int = EXIT_RUNTIME

    def __init__(
        self,
        code: str,
        message: str,
        details: Optional[Dict[str, Any]] = None,
    ):
        super().__init__(message)
        self.code = code
        self.message = message
        self.details = details


class ParameterError(AppException):
    status_code = status.HTTP_422_UNPROCESSABLE_ENTITY
    exit_code = EXIT_VALIDATION

    def __init__(self, name: str, value: Any, expected: str):
        super().__init__(
            code="PARAMETER_ERROR",
            message=f"{name}={value!r} вне допустимого диапазона: {expected}",
            details={"field": name, "value": value, "expected": expected},
        )


class PreconditionError(AppException):
    status_code = status.HTTP_422_UNPROCESSABLE_ENTITY
    exit_code = EXIT_VALIDATION

    def __init__(self, message: str, details: Optional[Dict] = None):
        super().__init__(code="PRECONDITION_FAILED", message=message, details=details)


class DimensionMismatchError(AppException):
    status_code = status.HTTP_422_UNPROCESSABLE_ENTITY
    exit_code = EXIT_VALIDATION

    def __init__(self, left: Any, right: Any):
        super().__init__(
            code="DIMENSION_MISMATCH",
            message=f"Несовместимые размерности: {left} и {right}",
            details={"left": left, "right": right},
        )


class TruncationError(AppException):
    status_code = status.HTTP_422_UNPROCESSABLE_ENTITY
    exit_code = EXIT_VALIDATION

    def __init__(self, total_photons: int, n_max: int):
        super().__init__(
            code="TRUNCATION_LEAKAGE",
            message=(
                f"Состояние имеет вес в секторе k+l={total_photons} >= n_max={n_max}; "
                "унитарное преобразование вышло бы за пределы усечённого базиса"
            ),
            details={"sector": total_photons, "n_max": n_max},
        )


class DegenerateSupportError(AppException):
    status_code = status.HTTP_409_CONFLICT

    def __init__(self, index: Any, probability: float):
        super().__init__(
            code="DEGENERATE_SUPPORT",
            message=f"Tr[ρΠ]={probability:.3e} <= 0 для бина {index} с ненулевым отсчётом",
            details={"bin": index, "probability": probability},
        )


class ThresholdTooHighError(AppException):
    status_code = status.HTTP_422_UNPROCESSABLE_ENTITY
    exit_code = EXIT_VALIDATION

    def __init__(self, threshold: float, retained: float):
        super().__init__(
            code="THRESHOLD_TOO_HIGH",
            message=f"Порог T={threshold} оставляет вероятность {retained:.3e}",
            details={"threshold": threshold, "retained_probability": retained},
        )


class NumericalConsistencyError(AppException):
    status_code = status.HTTP_409_CONFLICT

    def __init__(self, message: str, details: Optional[Dict] = None):
        super().__init__(code="NUMERICAL_CONSISTENCY", message=message, details=details)


class SampleFormatError(AppException):
    status_code = status.HTTP_422_UNPROCESSABLE_ENTITY
    exit_code = EXIT_VALIDATION

    def __init__(self, path: str, line: int, reason: str):
        self.line = line
        super().__init__(
            code="SAMPLE_FORMAT_ERROR",
            message=f"{path}:{line}: {reason}",
            details={"path": path, "line": line},
        )


class StorageError(AppException):
    status_code = status.HTTP_404_NOT_FOUND

    def __init__(self, path: str, reason: str):
        super().__init__(
            code="STORAGE_ERROR",
            message=f"{path}: {reason}",
            details={"path": path},
        )


# Exception Handlers


async def app_exception_handler(request: Request, exc: AppException) -> JSONResponse:
    logger.warning(f"{exc.code} on {request.method} {request.url.path}: {exc.message}")
    return JSONResponse(
        status_code=exc.status_code,
        content={
            "error": {
                "code": exc.code,
                "message": exc.message,
                "details": exc.details,
            }
        },
    )


async def validation_exception_handler(
    request: Request, exc: Union[RequestValidationError, ValidationError]
) -> JSONResponse:
    errors = []
    for error in exc.errors():
        errors.append(
            {
                "field": ".".join(str(x) for x in error["loc"]),
                "message": error["msg"],
            }
        )

    logger.warning(f"Validation error on {request.method} {request.url.path}: errors={errors}")

    return JSONResponse(
        status_code=status.HTTP_422_UNPROCESSABLE_ENTITY,
        content={
            "error": {
                "code": "VALIDATION_ERROR",
                "message": "Ошибка валидации",
                "details": {"errors": errors},
            }
        },
    )


def register_exception_handlers(app):
    """Регистрация обработчиков"""
    app.add_exception_handler(AppException, app_exception_handler)
    app.add_exception_handler(RequestValidationError, validation_exception_handler)
    app.add_exception_handler(ValidationError, validation_exception_handler)
