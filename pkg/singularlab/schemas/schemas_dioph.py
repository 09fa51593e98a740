from pydantic import BaseModel, Field


class MatrixBase(BaseModel):
    matrix: list[list[str]] = Field(..., min_length=1)


class SingularTestRequest(MatrixBase):
    c: str
    schedule: list[int] | None = None
    omega: str | None = None
    box_factor: str | None = None


class OmegaHatRequest(MatrixBase):
    schedule: list[int] | None = None


class ApproxOut(BaseModel):
    q: list[int]
    p: list[int]
    err: str


class QRecordOut(BaseModel):
    Q: int
    threshold: str
    solved: bool | None
    best: ApproxOut | None
    reason: str | None


class HorizonVerdictOut(BaseModel):
    status: str
    refuting_Q: int | None
    horizon: dict
    records: list[QRecordOut]


class OmegaEstimate(BaseModel):
    Q: int
    omega: str


class OmegaHatOut(BaseModel):
    estimates: list[OmegaEstimate]
    summary: str
    onset: int
