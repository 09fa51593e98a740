import logging
import logging.config
import os
from fractions import Fraction
from pathlib import Path
from typing import Annotated

from dotenv import dotenv_values
from pydantic import BaseModel, BeforeValidator, ConfigDict, Field, PlainSerializer, ValidationError, field_validator

from settings import settings
from singularlab.exceptions import InputError

logger = logging.getLogger(__name__)


def _to_fraction(value):
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool) or isinstance(value, float):
        raise ValueError("rational config values must be given as integers or strings")
    if isinstance(value, int):
        return Fraction(value)
    try:
        return Fraction(str(value).strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"{value!r} is not a rational number") from exc


def _to_schedule(value):
    if isinstance(value, str):
        value = [part for part in value.replace(";", ",").split(",") if part.strip()]
    return [int(str(q).strip()) for q in value]


Rational = Annotated[Fraction, BeforeValidator(_to_fraction), PlainSerializer(str, return_type=str)]


class Config(BaseModel):
    """Resolved run configuration; every output file embeds ``model_dump(mode="json")``."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True, extra="forbid")

    flow_base: Rational = Fraction(2)
    precision_bits: int = Field(192, ge=64)
    svp_dim_cap: int = Field(8, ge=1)
    box_budget: int = Field(2_000_000, ge=1)
    exhaustive_budget: int = Field(4096, ge=1)
    schedule: Annotated[list[int], BeforeValidator(_to_schedule)] = [16, 64, 256, 1024, 4096, 16384]
    onset_fraction: Rational = Fraction(1, 2)
    top_quartile: Rational = Fraction(1, 4)
    k_max: int = Field(20, ge=1)
    eps: Rational = Fraction(1, 8)
    c: Rational = Fraction(1, 20)
    output_dir: str = "results"
    seed: int = Field(0, ge=0, lt=2 ** 64)
    threads: int = Field(1, ge=1)
    dyadic_bits: int = Field(8, ge=1)
    survey_tolerance: Rational = Fraction(1, 20)
    lemma51_constant: Rational = Fraction(1)
    record_wallclock: bool = True

    @field_validator("flow_base")
    @classmethod
    def base_above_one(cls, value: Fraction) -> Fraction:
        if value <= 1:
            raise ValueError("flow_base must exceed 1")
        return value

    @field_validator("schedule")
    @classmethod
    def strictly_increasing(cls, value: list[int]) -> list[int]:
        if not value or value[0] < 1 or any(a >= b for a, b in zip(value, value[1:])):
            raise ValueError("schedule must be a non-empty strictly increasing list of positive integers")
        return value

    @field_validator("onset_fraction", "top_quartile")
    @classmethod
    def unit_interval(cls, value: Fraction) -> Fraction:
        if not 0 <= value < 1:
            raise ValueError("fractions of a schedule must lie in [0, 1)")
        return value

    @field_validator("eps", "c", "survey_tolerance", "lemma51_constant")
    @classmethod
    def positive(cls, value: Fraction) -> Fraction:
        if value <= 0:
            raise ValueError("must be positive")
        return value

    def onset_index(self, length: int) -> int:
        return min(int(length * self.onset_fraction), max(length - 1, 0))

    def merged(self, **overrides) -> "Config":
        """Copy with the non-None overrides applied (CLI flags win over files)."""
        values = self.model_dump()
        values.update({key: value for key, value in overrides.items() if value is not None})
        return build_config(values)


def build_config(values: dict) -> Config:
    try:
        return Config(**values)
    except ValidationError as exc:
        problems = "; ".join(f"{'.'.join(map(str, err['loc'])) or 'config'}: {err['msg']}" for err in exc.errors())
        raise InputError(f"invalid configuration: {problems}") from exc


def read_config_file(path: str | os.PathLike) -> dict:
    """Read a plain-text ``KEY=value`` file; keys are case-insensitive field names."""
    path = Path(path)
    if not path.is_file():
        raise InputError(f"config file {path} does not exist")
    raw = dotenv_values(path)
    values = {}
    for key, value in raw.items():
        name = key.strip().lower()
        if name not in Config.model_fields:
            raise InputError(f"unknown config key {key!r} in {path}")
        if value is None:
            raise InputError(f"config key {key!r} in {path} has no value")
        values[name] = value
    return values


def load_config(path: str | os.PathLike | None = None, **overrides) -> Config:
    """
    Resolve the run configuration.

    Precedence: explicit overrides (CLI flags) > ``path`` > the file named by
    ``SINGULARLAB_CONFIG`` > field defaults.
    """
    source = path or settings.SINGULARLAB_CONFIG
    values = read_config_file(source) if source else {}
    if source:
        logger.debug("loaded run config from %s", source)
    values.update({key: value for key, value in overrides.items() if value is not None})
    return build_config(values)


def configure_logging(verbose: bool = False):
    """Load the logging ini file (``SINGULARLAB_LOGGING`` or ./logging.ini), else basicConfig."""
    candidate = Path(settings.SINGULARLAB_LOGGING or "logging.ini")
    if candidate.is_file():
        logging.config.fileConfig(candidate, disable_existing_loggers=False)
    else:
        logging.basicConfig(level=logging.INFO, format="%(levelname)-5.5s [%(name)s] %(message)s")
    if verbose:
        logging.getLogger("singularlab").setLevel(logging.DEBUG)
