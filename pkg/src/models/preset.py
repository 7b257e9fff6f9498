"""Pydantic model of a named, ready-to-run experiment."""

from __future__ import annotations

from pydantic import BaseModel, Field

from .experiment import ExperimentConfig


class Preset(BaseModel):
    name: str = Field(..., description="Catalogue key")
    anchor: str = Field(
        ..., min_length=1, description="Published result or study the preset reproduces"
    )
    description: str = Field(..., description="Setup and reference value")
    config: ExperimentConfig
