"""Application configuration and settings."""

from __future__ import annotations

from functools import lru_cache
from pathlib import Path

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Process-level settings with environment variable support."""

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        env_prefix="FMLSIM_",
        case_sensitive=False,
        extra="ignore",
    )

    # Dataset settings
    data_dir: Path = Field(
        default=Path("data"),
        description=(
            "Root directory holding mnist/, cifar-10-batches-bin/ and cifar-100-binary/"
        ),
    )

    # Execution settings
    threads: int = Field(
        default=1,
        description="Number of workers running client updates within a round",
        ge=1,
    )
    eval_batch_size: int = Field(
        default=1000,
        description="Batch size used when evaluating a model",
        ge=1,
    )
    check_finite: bool = Field(
        default=True,
        description="Reject NaN/Inf produced by any forward operation",
    )

    log_level: str = Field(default="INFO", description="Root log level of the CLI")


class NormalizationStats:
    """Published per-dataset pixel statistics.

    Pixels are first scaled to [0, 1], then normalized per channel with these
    values. They are echoed into every run report so a run can be reproduced
    without guessing the preprocessing.
    """

    # Mean / std per channel, in channel order
    MNIST: tuple[tuple[float, ...], tuple[float, ...]] = ((0.1307,), (0.3081,))
    CIFAR10: tuple[tuple[float, ...], tuple[float, ...]] = (
        (0.4914, 0.4822, 0.4465),
        (0.2470, 0.2435, 0.2616),
    )
    # CIFAR-100 shares the CIFAR-10 statistics
    CIFAR100: tuple[tuple[float, ...], tuple[float, ...]] = CIFAR10

    @classmethod
    def for_dataset(cls, name: str) -> tuple[tuple[float, ...], tuple[float, ...]]:
        """Get the (mean, std) pair of a dataset.

        Args:
            name: Dataset id (``mnist``, ``cifar10`` or ``cifar100``), case-insensitive.

        Returns:
            The per-channel means and standard deviations.

        Raises:
            KeyError: If the dataset has no published statistics.
        """
        return {
            "mnist": cls.MNIST,
            "cifar10": cls.CIFAR10,
            "cifar100": cls.CIFAR100,
        }[name.lower()]

    @classmethod
    def as_dict(cls) -> dict[str, dict[str, list[float]]]:
        """Return all statistics as plain JSON-ready data."""
        return {
            name: {"mean": list(mean), "std": list(std)}
            for name, (mean, std) in (
                ("mnist", cls.MNIST),
                ("cifar10", cls.CIFAR10),
                ("cifar100", cls.CIFAR100),
            )
        }


@lru_cache
def get_settings() -> Settings:
    """Get cached application settings.

    This function uses LRU cache to ensure settings are only loaded once.
    To reload settings (e.g., in tests), clear the cache using:
        get_settings.cache_clear()

    Returns:
        Application settings instance.
    """
    return Settings()


# Singleton instance for easy access
settings = get_settings()

normalization_stats = NormalizationStats()
