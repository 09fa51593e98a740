from contextlib import contextmanager
from fractions import Fraction

from fastapi import HTTPException

from singularlab.config import Config
from singularlab.exceptions import SingularLabError
from singularlab.numeric import parse_scalar


@contextmanager
def domain_errors():
    """Translate a domain error into an HTTP error carrying its code and detail."""
    try:
        yield
    except SingularLabError as e:
        raise HTTPException(status_code=e.http_status, detail=e.to_dict())


def parse_matrix(rows: list[list[str]], precision: int):
    """Parse a matrix of scalar strings, rejecting ragged input."""
    if not rows or not rows[0] or any(len(row) != len(rows[0]) for row in rows):
        raise HTTPException(status_code=422, detail="Matrix must be a non-empty rectangular list of rows.")
    return tuple(tuple(parse_scalar(entry, precision) for entry in row) for row in rows)


def resolve_config(config: Config, c: str | None = None, schedule: list[int] | None = None) -> Config:
    """Apply the request's horizon overrides on top of the injected run config."""
    overrides = {"schedule": schedule}
    if c is not None:
        value = parse_scalar(c)
        if not isinstance(value, Fraction):
            raise HTTPException(status_code=422, detail="c must be a rational number.")
        overrides["c"] = value
    return config.merged(**overrides)


def parse_fraction(text: str | None) -> Fraction | None:
    """Parse an optional rational exponent such as "3/2"."""
    if text is None:
        return None
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError):
        raise HTTPException(status_code=422, detail=f"{text!r} is not a rational number.")
