"""Pydantic request/response models for the read-only artifact service."""

from __future__ import annotations

from pydantic import BaseModel, Field, model_validator


class RunDescriptor(BaseModel):
    run_id: str
    status: str
    grid_kind: str | None = None
    timesteps: list[float] | None = None
    error: str | None = None


class NumericRange(BaseModel):
    lo: float | None = None
    hi: float | None = None

    @model_validator(mode="after")
    def _ordered(self):
        if self.lo is not None and self.hi is not None and self.lo > self.hi:
            raise ValueError("numeric range must satisfy lo <= hi")
        return self


class FilterSpec(BaseModel):
    """Conjunctive member filter: categorical equality over manifest
    parameters plus numeric ranges over final-timestep summary attributes."""

    categorical: dict[str, str] = Field(default_factory=dict)
    numeric: dict[str, NumericRange] = Field(default_factory=dict)


class FilterResult(BaseModel):
    run_ids: list[str]


class CriterionRequest(BaseModel):
    exhaust: tuple[float, float]
    ambient: tuple[float, float]
    samples: int = 512
