"""Messages clients send to the server at the end of a round."""

from __future__ import annotations

import numpy as np
from pydantic import BaseModel, ConfigDict, Field


class ModelUpload(BaseModel):
    """FedAvg/FedProx upload: full parameters plus the sample count used for weighting."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    client_id: int = Field(..., ge=0)
    round: int = Field(..., ge=1)
    params: np.ndarray
    fingerprint: str = Field(..., min_length=1, description="Shared-scope architecture hash")
    num_samples: int = Field(..., ge=1)


class MemeUpload(BaseModel):
    """FML upload: only the shared portion of the meme model.

    Personalized-model parameters, adaptor parameters and sample counts are never
    part of this message.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    client_id: int = Field(..., ge=0)
    round: int = Field(..., ge=1)
    shared_params: np.ndarray
    fingerprint: str = Field(..., min_length=1, description="Shared-scope architecture hash")
