from pydantic import BaseModel, Field


class DeltaProfileRequest(BaseModel):
    x: list[str] = Field(..., min_length=1)
    k_max: int | None = Field(None, ge=1)
    eps: str | None = None
    base: str | None = None


class DeltaValue(BaseModel):
    k: int
    delta: str
    vector: list[str]


class ClassificationOut(BaseModel):
    kind: str
    floor: str | None


class DeltaProfileOut(BaseModel):
    x: list[str]
    base: str
    k_max: int
    values: list[DeltaValue]
    classification: ClassificationOut | None
    horizon: dict
