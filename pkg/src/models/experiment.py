"""Pydantic models describing an experiment."""

from __future__ import annotations

from pathlib import Path
from typing import Annotated, Literal, Self

from pydantic import BaseModel, ConfigDict, Field, model_validator

Architecture = Literal["mlp", "lenet5", "cnn1", "cnn2", "custom"]
Strategy = Literal["fedavg", "fedprox", "fml", "solo"]

MNIST_SHAPE = (1, 28, 28)
CIFAR_SHAPE = (3, 32, 32)


class StrictModel(BaseModel):
    """Base model rejecting unknown keys."""

    model_config = ConfigDict(extra="forbid")


class LayerSpec(StrictModel):
    """One layer of a custom architecture."""

    kind: Literal["conv3x3", "maxpool2x2", "relu", "flatten", "linear"]
    out: int | None = Field(default=None, ge=1, description="Filters (conv) or features (linear)")
    padding: Literal[0, 1] = 0

    @model_validator(mode="after")
    def check_width(self) -> Self:
        if self.kind in ("conv3x3", "linear") and self.out is None:
            msg = f"{self.kind} layer needs 'out'"
            raise ValueError(msg)
        return self


class ModelSpec(StrictModel):
    """Architecture of one model; shapes are filled from the dataset when omitted."""

    architecture: Architecture
    input_shape: tuple[int, int, int] | None = None
    num_classes: int | None = Field(default=None, ge=2)
    split_point: int | None = Field(
        default=None,
        ge=1,
        description="Layer index separating the shared trunk from the local head",
    )
    hidden_width: int | None = Field(
        default=None, ge=1, description="MLP hidden width (200) or CNN1 hidden FC width (120)"
    )
    logit_relu: bool = Field(default=False, description="Apply ReLU to the final FC output")
    layers: list[LayerSpec] = Field(default_factory=list)

    @model_validator(mode="after")
    def check_layers(self) -> Self:
        if self.architecture == "custom" and not self.layers:
            msg = "custom architecture needs 'layers'"
            raise ValueError(msg)
        if self.architecture != "custom" and self.layers:
            msg = "'layers' is only allowed for the custom architecture"
            raise ValueError(msg)
        return self


class DistillConfig(StrictModel):
    """Weights of the mutual-learning losses and their schedule."""

    alpha: float = Field(default=0.5, ge=0.0, le=1.0)
    beta: float = Field(default=0.5, ge=0.0, le=1.0)
    temperature: float = Field(default=1.0, gt=0.0)
    schedule: Literal["constant", "linear"] = "constant"
    alpha_end: float | None = Field(default=None, ge=0.0, le=1.0)
    beta_end: float | None = Field(default=None, ge=0.0, le=1.0)

    @model_validator(mode="after")
    def fill_endpoints(self) -> Self:
        if self.alpha_end is None:
            self.alpha_end = self.alpha
        if self.beta_end is None:
            self.beta_end = self.beta
        return self


class Hyperparams(StrictModel):
    """Optimization and federation hyper-parameters."""

    learning_rate: float = Field(default=0.01, gt=0.0)
    lr_decay: float = Field(default=1.0, gt=0.0, le=1.0, description="Per-round multiplier")
    momentum: float = Field(default=0.9, ge=0.0, lt=1.0)
    weight_decay: float = Field(default=5e-4, ge=0.0)
    batch_size: int = Field(default=128, ge=1)
    local_epochs: int = Field(default=5, ge=1)
    rounds: int = Field(default=200, ge=1)
    mu: float = Field(default=0.01, ge=0.0, description="FedProx proximal coefficient")
    distill: DistillConfig = Field(default_factory=DistillConfig)
    dml_mode: Literal["simultaneous", "alternating"] = "simultaneous"
    aggregation: Literal["weighted", "uniform"] = Field(
        default="weighted", description="FedAvg/FedProx merge rule (FML always merges uniformly)"
    )
    seed: int = Field(default=0, ge=0, lt=2**64)

    def learning_rate_at(self, round_index: int) -> float:
        """Learning rate of a 1-based round."""
        return self.learning_rate * self.lr_decay ** (round_index - 1)


class RealDatasetSpec(StrictModel):
    name: Literal["mnist", "cifar10", "cifar100"]
    train_limit: int | None = Field(default=None, ge=1, description="Keep the first N train images")
    test_limit: int | None = Field(default=None, ge=1, description="Keep the first N test images")

    @property
    def num_classes(self) -> int:
        return 100 if self.name == "cifar100" else 10

    @property
    def image_shape(self) -> tuple[int, int, int]:
        return MNIST_SHAPE if self.name == "mnist" else CIFAR_SHAPE


class SyntheticDatasetSpec(StrictModel):
    name: Literal["synthetic"]
    classes: int = Field(default=5, ge=2)
    image_shape: tuple[int, int, int] = (1, 1, 16)
    train_size: int = Field(default=1000, ge=2)
    test_size: int = Field(default=500, ge=2)
    spread: float = Field(default=0.5, gt=0.0)
    seed: int = Field(default=0, ge=0)

    @property
    def num_classes(self) -> int:
        return self.classes

    @model_validator(mode="after")
    def check_sizes(self) -> Self:
        if min(self.train_size, self.test_size) < self.classes:
            msg = "train_size and test_size must be at least the number of classes"
            raise ValueError(msg)
        return self


DatasetSpec = Annotated[RealDatasetSpec | SyntheticDatasetSpec, Field(discriminator="name")]


class PartitionSpec(StrictModel):
    """How the training data is split over K clients."""

    clients: int = Field(default=5, ge=1, description="K")
    mode: Literal["iid", "noniid"] = "iid"
    shards_per_client: int | None = Field(default=None, ge=1, description="p (Non-IID only)")
    seed: int = Field(default=0, ge=0, lt=2**64)

    @model_validator(mode="after")
    def check_shards(self) -> Self:
        if self.mode == "noniid" and self.shards_per_client is None:
            msg = "noniid partitioning needs 'shards_per_client'"
            raise ValueError(msg)
        return self


class EvaluationSpec(StrictModel):
    memes: bool = Field(default=False, description="Record meme accuracy on validate sets")
    global_on_validate: bool = Field(
        default=False, description="Record global accuracy on every private validate set"
    )


def _default_architecture(dataset: RealDatasetSpec | SyntheticDatasetSpec) -> Architecture:
    return "cnn1" if dataset.name in ("cifar10", "cifar100") else "mlp"


def _resolve_shapes(
    spec: ModelSpec, dataset: RealDatasetSpec | SyntheticDatasetSpec
) -> ModelSpec:
    update: dict[str, object] = {}
    if spec.input_shape is None:
        update["input_shape"] = dataset.image_shape
    if spec.num_classes is None:
        update["num_classes"] = dataset.num_classes
    return spec.model_copy(update=update) if update else spec


class ExperimentConfig(StrictModel):
    """A complete, validated experiment."""

    name: str = "experiment"
    dataset: DatasetSpec
    client_datasets: list[DatasetSpec] = Field(
        default_factory=list, description="Per-client datasets (objective heterogeneity)"
    )
    partition: PartitionSpec = Field(default_factory=PartitionSpec)
    strategy: Strategy
    global_model: ModelSpec | None = None
    client_models: list[ModelSpec] = Field(
        default_factory=list, description="Per-client personalized models (model heterogeneity)"
    )
    hyperparams: Hyperparams = Field(default_factory=Hyperparams)
    evaluation: EvaluationSpec = Field(default_factory=EvaluationSpec)
    precision: Literal["float32", "float64"] = "float32"
    output: Path | None = None

    def dataset_of(self, client_id: int) -> RealDatasetSpec | SyntheticDatasetSpec:
        return self.client_datasets[client_id] if self.client_datasets else self.dataset

    def model_of(self, client_id: int) -> ModelSpec:
        """Personalized model spec of a client.

        Without ``client_models`` this is the unsplit global architecture sized for
        the client's own dataset.
        """
        if self.client_models:
            return self.client_models[client_id]
        assert self.global_model is not None
        classes = self.dataset_of(client_id).num_classes
        return self.global_model.model_copy(update={"split_point": None, "num_classes": classes})

    @property
    def shares_trunk(self) -> bool:
        return self.global_model is not None and self.global_model.split_point is not None

    @model_validator(mode="after")
    def resolve_and_check(self) -> Self:
        k = self.partition.clients
        if self.client_models and len(self.client_models) != k:
            msg = f"client_models: expected 0 or {k} entries, got {len(self.client_models)}"
            raise ValueError(msg)
        if self.client_datasets and len(self.client_datasets) != k:
            msg = f"client_datasets: expected 0 or {k} entries, got {len(self.client_datasets)}"
            raise ValueError(msg)

        if self.global_model is None:
            self.global_model = ModelSpec(architecture=_default_architecture(self.dataset))
        self.global_model = _resolve_shapes(self.global_model, self.dataset)
        self.client_models = [
            _resolve_shapes(spec, self.dataset_of(i)) for i, spec in enumerate(self.client_models)
        ]

        if self.client_datasets and self.global_model.split_point is None:
            msg = "global_model.split_point: per-client datasets need a shared trunk"
            raise ValueError(msg)
        if self.strategy == "fml" and self.global_model.split_point is None:
            classes = {spec.num_classes for spec in self.client_models}
            if len(classes) > 1:
                msg = (
                    "global_model.split_point: fml with mixed client class counts "
                    "needs a shared trunk"
                )
                raise ValueError(msg)
        for i, spec in enumerate(self.client_models):
            dataset = self.dataset_of(i)
            if spec.num_classes != dataset.num_classes:
                msg = (
                    f"client_models.{i}.num_classes: {spec.num_classes} does not match "
                    f"the {dataset.num_classes} classes of its dataset"
                )
                raise ValueError(msg)
            if spec.input_shape != dataset.image_shape:
                msg = f"client_models.{i}.input_shape: does not match {dataset.image_shape}"
                raise ValueError(msg)
        for i, dataset in enumerate(self.client_datasets):
            if dataset.image_shape != self.global_model.input_shape:
                msg = (
                    f"client_datasets.{i}: image shape {dataset.image_shape} does not fit "
                    f"the shared trunk input {self.global_model.input_shape}"
                )
                raise ValueError(msg)
        if (
            self.client_datasets
            and not self.client_models
            and self.strategy in ("fml", "solo")
            and self.global_model.architecture == "custom"
            and {d.num_classes for d in self.client_datasets} != {self.global_model.num_classes}
        ):
            msg = (
                "client_models: a custom global architecture has a fixed class count; "
                "list a personalized model for every client"
            )
            raise ValueError(msg)
        if self.global_model.input_shape != self.dataset.image_shape:
            msg = f"global_model.input_shape: does not match {self.dataset.image_shape}"
            raise ValueError(msg)
        if (
            self.global_model.split_point is None
            and self.global_model.num_classes != self.dataset.num_classes
        ):
            msg = (
                f"global_model.num_classes: {self.global_model.num_classes} does not match "
                f"the {self.dataset.num_classes} classes of the dataset"
            )
            raise ValueError(msg)
        return self
