from typing import Literal

from pydantic import BaseModel, Field


class SubspaceBase(BaseModel):
    A: list[list[str]] = Field(..., min_length=1)
    c: str | None = None
    schedule: list[int] | None = None


class Check2StarRequest(SubspaceBase):
    j_range: list[int] | None = None
    projection: Literal["pi_bullet", "pi"] = "pi_bullet"
    mode: Literal["two_star", "omega"] = "two_star"
    omega: str | None = None
    sensitivity: bool = False


class Main3Request(SubspaceBase):
    pass


class CellOut(BaseModel):
    Q: int
    j: int
    solved: bool | None
    reason: str | None
    solutions: list[dict]
    conservative_box: dict | None


class ConditionReportOut(BaseModel):
    status: str
    satisfying_Q: int | None
    horizon: dict
    cells: list[CellOut]
    certificates: list[dict]


class Main3Out(BaseModel):
    shape: str
    steps: list[dict]
    status: str
    consistent: bool | None
    conclusion: str
    witnesses: dict | None
