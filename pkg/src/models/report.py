"""Pydantic models for simulation output."""

from __future__ import annotations

from typing import Any, Literal

from pydantic import BaseModel, ConfigDict, Field

from .experiment import ExperimentConfig

GLOBAL_ENTITY = "global"


def client_entity(client_id: int) -> str:
    return f"client-{client_id}"


class RoundRecord(BaseModel):
    """Accuracy and mean loss of one model on one split after a round."""

    model_config = ConfigDict(frozen=True)

    round: int = Field(..., ge=1)
    entity: str
    model: Literal["global", "meme", "local"]
    split: Literal["test", "validate"]
    accuracy: float = Field(..., ge=0.0, le=1.0)
    loss: float

    @property
    def client_id(self) -> int | None:
        if self.entity == GLOBAL_ENTITY:
            return None
        return int(self.entity.removeprefix("client-"))

    def sort_key(self) -> tuple[int, int, str, str]:
        client = self.client_id
        return (self.round, -1 if client is None else client, self.model, self.split)


class RunReport(BaseModel):
    """Every measurement of a run plus the resolved configuration that produced it."""

    config: ExperimentConfig
    records: list[RoundRecord] = Field(default_factory=list)
    metadata: dict[str, Any] = Field(default_factory=dict)

    def sorted_records(self) -> list[RoundRecord]:
        return sorted(self.records, key=RoundRecord.sort_key)

    def select(
        self,
        *,
        entity: str | None = None,
        model: str | None = None,
        split: str | None = None,
    ) -> list[RoundRecord]:
        """Records matching every given field, in round order."""
        return [
            r
            for r in self.sorted_records()
            if (entity is None or r.entity == entity)
            and (model is None or r.model == model)
            and (split is None or r.split == split)
        ]
