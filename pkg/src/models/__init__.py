"""Pydantic models shared across the application."""

from .experiment import (
    DatasetSpec,
    DistillConfig,
    EvaluationSpec,
    ExperimentConfig,
    Hyperparams,
    LayerSpec,
    ModelSpec,
    PartitionSpec,
    RealDatasetSpec,
    SyntheticDatasetSpec,
)
from .messages import MemeUpload, ModelUpload
from .partition import ClientData
from .preset import Preset
from .report import GLOBAL_ENTITY, RoundRecord, RunReport, client_entity

__all__ = [
    "GLOBAL_ENTITY",
    "ClientData",
    "DatasetSpec",
    "DistillConfig",
    "EvaluationSpec",
    "ExperimentConfig",
    "Hyperparams",
    "LayerSpec",
    "MemeUpload",
    "ModelSpec",
    "ModelUpload",
    "PartitionSpec",
    "Preset",
    "RealDatasetSpec",
    "RoundRecord",
    "RunReport",
    "SyntheticDatasetSpec",
    "client_entity",
]
