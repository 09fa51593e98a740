"""
Monte Carlo surveys: exact points sampled on L_A (or on a polynomial curve
inside it), each classified by the horizon singularity test.
"""
import csv
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from singularlab.config import Config
from singularlab.dioph import SingularityQuery, Verdict, singular_test
from singularlab.exceptions import HorizonMismatch, InputError, SingularLabError
from singularlab.numeric import Scalar, as_scalar, format_scalar, parse_scalar
from singularlab.subspace import SubspaceParam, contains, embed_point

logger = logging.getLogger(__name__)


def _dyadic(rng: np.random.Generator, low: Fraction, high: Fraction, bits: int) -> Fraction:
    step = int(rng.integers(0, 2 ** bits + 1))
    return low + (high - low) * Fraction(step, 2 ** bits)


def _offsets(offset, size: int) -> tuple[Scalar, ...]:
    if offset is None:
        return (Fraction(0),) * size
    offset = tuple(as_scalar(t) for t in offset)
    if len(offset) != size:
        raise InputError(f"offset has length {len(offset)}, expected {size}")
    return offset


@dataclass(frozen=True)
class UniformSampler:
    """Dyadic points of the parameter box [low, high]^s, shifted by an optional offset."""
    low: Fraction = Fraction(0)
    high: Fraction = Fraction(1)
    offset: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "low", Fraction(self.low))
        object.__setattr__(self, "high", Fraction(self.high))
        if self.low >= self.high:
            raise InputError("sampler box needs low < high")

    def draw(self, P: SubspaceParam, rng: np.random.Generator, bits: int) -> tuple[tuple, tuple]:
        shift = _offsets(self.offset, P.s)
        x = tuple(_dyadic(rng, self.low, self.high, bits) + d for d in shift)
        return x, embed_point(P, x)

    def to_json(self) -> dict:
        return {
            "kind": "uniform",
            "low": str(self.low),
            "high": str(self.high),
            "offset": None if self.offset is None else [format_scalar(t) for t in self.offset],
        }


def _evaluate(poly, t: Fraction) -> Scalar:
    value = Fraction(0)
    for coeff in reversed(poly):
        value = value * t + coeff
    return value


@dataclass(frozen=True)
class CurveSampler:
    """
    t -> (f_1(t), ..., f_n(t)) for dyadic t in [low, high]; each f_i is a list of
    scalar coefficients, constant term first. The offset shifts the first s
    coordinates and is carried through A.
    """
    coordinates: tuple
    low: Fraction = Fraction(0)
    high: Fraction = Fraction(1)
    offset: tuple | None = None

    def __post_init__(self):
        coordinates = tuple(tuple(as_scalar(c) for c in poly) for poly in self.coordinates)
        if not coordinates or any(not poly for poly in coordinates):
            raise InputError("a curve needs non-empty polynomial coordinates")
        object.__setattr__(self, "coordinates", coordinates)
        object.__setattr__(self, "low", Fraction(self.low))
        object.__setattr__(self, "high", Fraction(self.high))
        if self.low >= self.high:
            raise InputError("curve parameter range needs low < high")

    @classmethod
    def along(cls, P: SubspaceParam, param_polys, **kwargs) -> "CurveSampler":
        """Lift polynomial parameters x(t) to the curve (x(t), x~(t)A) inside L_A."""
        polys = [tuple(as_scalar(c) for c in poly) for poly in param_polys]
        if len(polys) != P.s:
            raise InputError(f"expected {P.s} parameter polynomials, got {len(polys)}")
        degree = max((len(poly) for poly in polys), default=1)
        padded = [poly + (Fraction(0),) * (degree - len(poly)) for poly in polys]
        tail = []
        for t in range(P.n - P.s):
            lifted = [P.A[0][t] if d == 0 else Fraction(0) for d in range(degree)]
            for i, poly in enumerate(padded):
                for d, coeff in enumerate(poly):
                    lifted[d] += P.A[i + 1][t] * coeff
            tail.append(tuple(lifted))
        return cls(coordinates=tuple(polys) + tuple(tail), **kwargs)

    def draw(self, P: SubspaceParam, rng: np.random.Generator, bits: int) -> tuple[tuple, tuple]:
        if len(self.coordinates) != P.n:
            raise InputError(f"curve has {len(self.coordinates)} coordinates, expected n={P.n}")
        t = _dyadic(rng, self.low, self.high, bits)
        y = [_evaluate(poly, t) for poly in self.coordinates]
        shift = _offsets(self.offset, P.s)
        x = tuple(yi + d for yi, d in zip(y[:P.s], shift))
        if self.offset is not None:
            y = list(embed_point(P, x))
        y = tuple(y)
        if not contains(P, y):
            raise InputError(f"curve point at t={t} does not lie on L_A")
        return x, y

    def to_json(self) -> dict:
        return {
            "kind": "curve",
            "coordinates": [[format_scalar(c) for c in poly] for poly in self.coordinates],
            "low": str(self.low),
            "high": str(self.high),
            "offset": None if self.offset is None else [format_scalar(t) for t in self.offset],
        }


def sampler_from_json(payload: dict):
    kind = payload.get("kind", "uniform")
    offset = payload.get("offset")
    offset = None if offset is None else tuple(parse_scalar(t) for t in offset)
    low, high = Fraction(payload.get("low", 0)), Fraction(payload.get("high", 1))
    if kind == "uniform":
        return UniformSampler(low, high, offset)
    if kind == "curve":
        return CurveSampler(tuple(tuple(poly) for poly in payload["coordinates"]), low, high, offset)
    raise InputError(f"unknown sampler kind {kind!r}")


@dataclass(frozen=True)
class SurveySpec:
    subspace: SubspaceParam
    sampler: UniformSampler | CurveSampler
    sample_count: int
    c: Scalar = Fraction(1, 20)
    schedule: tuple = (16, 64, 256, 1024, 4096, 16384)
    onset_fraction: Fraction = Fraction(1, 2)
    seed: int = 0

    def __post_init__(self):
        if self.sample_count < 1:
            raise InputError("sample_count must be at least 1")
        if not 0 <= self.seed < 2 ** 64:
            raise InputError("seed must be a 64-bit unsigned integer")
        object.__setattr__(self, "c", as_scalar(self.c))
        object.__setattr__(self, "schedule", tuple(int(Q) for Q in self.schedule))
        object.__setattr__(self, "onset_fraction", Fraction(self.onset_fraction))

    @classmethod
    def from_config(cls, subspace: SubspaceParam, sampler, sample_count: int, config: Config) -> "SurveySpec":
        return cls(subspace, sampler, sample_count, config.c, tuple(config.schedule),
                   config.onset_fraction, config.seed)

    def query(self, point) -> SingularityQuery:
        return SingularityQuery.for_vector(point, self.c, self.schedule, onset_fraction=self.onset_fraction)

    def horizon(self) -> dict:
        return {
            "c": format_scalar(self.c),
            "schedule": list(self.schedule),
            "onset_fraction": str(self.onset_fraction),
            "omega": str(self.subspace.n),
        }

    def to_json(self) -> dict:
        return {
            "subspace": self.subspace.to_json(),
            "sampler": self.sampler.to_json(),
            "sample_count": self.sample_count,
            "c": format_scalar(self.c),
            "schedule": list(self.schedule),
            "onset_fraction": str(self.onset_fraction),
            "seed": self.seed,
        }

    @classmethod
    def from_json(cls, payload: dict) -> "SurveySpec":
        subspace = payload["subspace"]
        A = subspace["A"] if isinstance(subspace, dict) else subspace
        return cls(
            subspace=SubspaceParam.from_matrix(A),
            sampler=sampler_from_json(payload.get("sampler", {})),
            sample_count=int(payload["sample_count"]),
            c=parse_scalar(str(payload.get("c", "1/20"))),
            schedule=tuple(payload.get("schedule", (16, 64, 256, 1024, 4096, 16384))),
            onset_fraction=Fraction(str(payload.get("onset_fraction", "1/2"))),
            seed=int(payload.get("seed", 0)),
        )


@dataclass
class SampleResult:
    index: int
    x: tuple
    point: tuple
    status: Verdict
    refuting_Q: int | None = None
    witness: dict | None = None
    reason: str | None = None

    def to_json(self) -> dict:
        return {
            "index": self.index,
            "x": [format_scalar(t) for t in self.x],
            "point": [format_scalar(t) for t in self.point],
            "status": self.status.value,
            "refuting_Q": self.refuting_Q,
            "witness": self.witness,
            "reason": self.reason,
        }

    @classmethod
    def from_json(cls, payload: dict) -> "SampleResult":
        return cls(
            index=payload["index"],
            x=tuple(parse_scalar(t) for t in payload["x"]),
            point=tuple(parse_scalar(t) for t in payload["point"]),
            status=Verdict(payload["status"]),
            refuting_Q=payload.get("refuting_Q"),
            witness=payload.get("witness"),
            reason=payload.get("reason"),
        )


def sample_rng(seed: int, index: int) -> np.random.Generator:
    """Independent stream per (seed, index), so samples do not depend on dispatch order."""
    return np.random.default_rng([seed, index])


def classify_sample(spec: SurveySpec, index: int, config: Config | None = None) -> SampleResult:
    config = config or Config()
    x, y = spec.sampler.draw(spec.subspace, sample_rng(spec.seed, index), config.dyadic_bits)
    if not contains(spec.subspace, y):
        raise InputError(f"sample {index} does not lie on L_A")
    try:
        verdict = singular_test(spec.query(y), config)
    except SingularLabError as exc:
        logger.info("sample %s left inconclusive: %s", index, exc.detail)
        return SampleResult(index, x, y, Verdict.INCONCLUSIVE, reason=f"{exc.code}: {exc.detail}")
    witness = None
    if verdict.status is Verdict.WITNESSED and verdict.records[-1].best is not None:
        witness = verdict.records[-1].best.to_json()
    reason = next((r.reason for r in verdict.records if r.reason), None)
    logger.debug("sample %s: %s", index, verdict.status.value)
    return SampleResult(index, x, y, verdict.status, verdict.refuting_Q, witness, reason)


@dataclass
class SurveyReport:
    samples: list[SampleResult]
    fractions: dict[str, Fraction]
    horizon: dict = field(default_factory=dict)
    spec: dict = field(default_factory=dict)

    @classmethod
    def build(cls, spec: SurveySpec, samples: list[SampleResult]) -> "SurveyReport":
        samples = sorted(samples, key=lambda sample: sample.index)
        total = len(samples)
        fractions = {
            verdict.value: Fraction(sum(1 for s in samples if s.status is verdict), total) for verdict in Verdict
        }
        return cls(samples, fractions, spec.horizon(), spec.to_json())

    def to_json(self) -> dict:
        return {
            "spec": self.spec,
            "horizon": self.horizon,
            "fractions": {key: str(value) for key, value in self.fractions.items()},
            "samples": [sample.to_json() for sample in self.samples],
        }

    @classmethod
    def from_json(cls, payload: dict) -> "SurveyReport":
        return cls(
            samples=[SampleResult.from_json(s) for s in payload["samples"]],
            fractions={key: Fraction(value) for key, value in payload["fractions"].items()},
            horizon=payload["horizon"],
            spec=payload.get("spec", {}),
        )

    def write_csv(self, stream):
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(["index", "x", "point", "status", "refuting_Q", "witness", "reason"])
        for sample in self.samples:
            witness = "" if sample.witness is None else f"q={sample.witness['q']} err={sample.witness['err']}"
            writer.writerow([
                sample.index,
                " ".join(format_scalar(t) for t in sample.x),
                " ".join(format_scalar(t) for t in sample.point),
                sample.status.value,
                "" if sample.refuting_Q is None else sample.refuting_Q,
                witness,
                sample.reason or "",
            ])


def run_survey(spec: SurveySpec, config: Config | None = None,
               progress: Callable[[int], None] | None = None) -> SurveyReport:
    """Classify every sample; results are merged in index order whatever the thread count."""
    config = config or Config()
    indices = range(spec.sample_count)
    if config.threads > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            samples = []
            for sample in pool.map(lambda i: classify_sample(spec, i, config), indices):
                samples.append(sample)
                if progress:
                    progress(1)
    else:
        samples = []
        for index in indices:
            samples.append(classify_sample(spec, index, config))
            if progress:
                progress(1)
    report = SurveyReport.build(spec, samples)
    logger.info("survey of %s samples: %s", spec.sample_count,
                {key: str(value) for key, value in report.fractions.items()})
    return report


@dataclass
class SurveyDiff:
    deltas: dict[str, Fraction]
    tolerance: Fraction
    horizon: dict

    @property
    def max_delta(self) -> Fraction:
        return max(abs(d) for d in self.deltas.values())

    @property
    def exceeds(self) -> bool:
        return self.max_delta > self.tolerance

    def to_json(self) -> dict:
        return {
            "deltas": {key: str(value) for key, value in self.deltas.items()},
            "max_delta": str(self.max_delta),
            "tolerance": str(self.tolerance),
            "exceeds": self.exceeds,
            "horizon": self.horizon,
        }


def compare_surveys(
    a: SurveyReport, b: SurveyReport, tolerance=None, config: Config | None = None
) -> SurveyDiff:
    """Per-verdict fraction deltas b - a; both reports must share their horizon."""
    if a.horizon != b.horizon:
        raise HorizonMismatch(f"survey horizons differ: {a.horizon} vs {b.horizon}")
    if tolerance is None:
        tolerance = (config or Config()).survey_tolerance
    tolerance = Fraction(tolerance)
    deltas = {v.value: b.fractions.get(v.value, Fraction(0)) - a.fractions.get(v.value, Fraction(0)) for v in Verdict}
    return SurveyDiff(deltas, tolerance, a.horizon)
