"""Wire schemas for the /v1 endpoints."""

from __future__ import annotations

from pydantic import BaseModel, ConfigDict, Field

PROBABILITY_SUM_TOLERANCE = 1e-4


class NliPair(BaseModel):
    premise: str
    hypothesis: str


class NliRequest(BaseModel):
    pairs: list[NliPair] = Field(min_length=1)


class Verdict(BaseModel):
    entailment: float = Field(ge=0.0, le=1.0)
    neutral: float = Field(ge=0.0, le=1.0)
    contradiction: float = Field(ge=0.0, le=1.0)


class NliResponse(BaseModel):
    model_config = ConfigDict(protected_namespaces=())

    verdicts: list[Verdict]
    model_id: str
    truncated: list[bool]


class SplitRequest(BaseModel):
    sentences: list[str] = Field(min_length=1)


class SplitResponse(BaseModel):
    model_config = ConfigDict(protected_namespaces=())

    splits: list[list[str]]
    model_id: str


class HealthResponse(BaseModel):
    model_config = ConfigDict(protected_namespaces=())

    status: str
    model_ids: dict[str, str]
