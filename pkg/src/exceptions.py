"""Custom exception classes for the simulator."""

from __future__ import annotations

from pathlib import Path


class FmlSimError(Exception):
    """Base class of every error raised by the simulator."""


class DimensionError(FmlSimError):
    """Raised when array shapes or vector lengths do not agree."""


class ParameterError(FmlSimError):
    """Raised when a numeric argument is outside its valid range."""


class UsageError(FmlSimError):
    """Raised when an API is called in a state it does not support."""


class NumericalError(FmlSimError):
    """Raised when an operation produces NaN or Inf from finite inputs."""


class DatasetFormatError(FmlSimError):
    """Raised when a dataset file does not match its binary format."""

    def __init__(self, path: Path | str, offset: int, reason: str) -> None:
        self.path = Path(path)
        self.offset = offset
        self.reason = reason
        super().__init__(f"{self.path}: at byte offset {offset}: {reason}")


class ConfigurationError(FmlSimError):
    """Raised when an experiment configuration is invalid or inconsistent."""

    def __init__(self, key_path: str, reason: str) -> None:
        self.key_path = key_path
        self.reason = reason
        where = key_path or "<root>"
        super().__init__(f"{where}: {reason}")


class RoundAbortedError(FmlSimError):
    """Raised when a client fails during a round; the round is not merged."""

    def __init__(self, round_index: int, client_id: int, cause: BaseException) -> None:
        self.round_index = round_index
        self.client_id = client_id
        self.cause = cause
        super().__init__(f"round {round_index}, client {client_id}: {cause}")


class PresetNotFoundError(FmlSimError):
    """Raised when a preset name is not in the catalogue."""

    def __init__(self, name: str) -> None:
        self.name = name
        super().__init__(f"Preset '{name}' not found.")
