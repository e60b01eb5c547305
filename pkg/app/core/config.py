"""
Конфигурация приложения
"""

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=True,
    )

    # Основные
    PROJECT_NAME: str = "Dual-Rail Homodyne Tomography"
    API_V1_STR: str = "/api/v1"
    DEBUG: bool = False
    LOG_LEVEL: str = "INFO"

    # Файлы
    OUTPUT_DIR: str = "./output"
    POVM_CACHE_DIR: str = "./.povm_cache"  # пустая строка отключает кэш

    # Случайность и параллелизм
    DEFAULT_SEED: int = 20040601
    DEFAULT_THREADS: int = 1
    SAMPLER_SHARD_SIZE: int = 50_000

    # Лимиты HTTP API
    MAX_API_SAMPLES: int = 200_000
    MAX_API_GRID_POINTS: int = 40_000


settings = Settings()
