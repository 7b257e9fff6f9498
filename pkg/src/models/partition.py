"""Pydantic models for per-client data assignments."""

from __future__ import annotations

import numpy as np
from pydantic import BaseModel, ConfigDict, Field


class ClientData(BaseModel):
    """Index sets realizing one client's private distribution.

    ``train_indices`` point into the training split, ``validate_indices`` into the
    test split of the client's dataset.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    client_id: int = Field(..., ge=0)
    train_indices: np.ndarray
    validate_indices: np.ndarray

    @property
    def num_train(self) -> int:
        return int(self.train_indices.size)

    @property
    def num_validate(self) -> int:
        return int(self.validate_indices.size)
