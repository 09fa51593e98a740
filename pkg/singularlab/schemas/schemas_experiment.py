from typing import Literal

from pydantic import BaseModel, Field


class SamplerIn(BaseModel):
    kind: Literal["uniform", "curve"] = "uniform"
    low: str = "0"
    high: str = "1"
    offset: list[str] | None = None
    param_polys: list[list[str]] | None = None


class SurveyRequest(BaseModel):
    A: list[list[str]] = Field(..., min_length=1)
    sampler: SamplerIn = SamplerIn()
    sample_count: int = Field(..., ge=1, le=10_000)
    c: str | None = None
    schedule: list[int] | None = None
    seed: int | None = Field(None, ge=0, lt=2 ** 64)


class SampleOut(BaseModel):
    index: int
    x: list[str]
    point: list[str]
    status: str
    refuting_Q: int | None
    witness: dict | None
    reason: str | None


class SurveyOut(BaseModel):
    spec: dict
    horizon: dict
    fractions: dict[str, str]
    samples: list[SampleOut]
