"""
The dynamical side: trajectories g_k u_x Z^{n+1} in the space of unimodular
lattices, their delta-profiles and horizon-relative divergence verdicts.
"""
import csv
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import NamedTuple

from singularlab.config import Config
from singularlab.exceptions import InputError
from singularlab.exterior import flow_action, flow_matrix, sup_norm, wedge_all
from singularlab.lattice import LatticeBasis, Submodule, enumerate_primitive, shortest_vector
from singularlab.numeric import (
    Scalar, as_scalar, format_scalar, pow_base, rational_approximation, scalar_cmp, scalar_max, to_mpf,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class FlowParams:
    n: int
    base: Scalar = Fraction(2)
    k_max: int = 20
    eps: Scalar = Fraction(1, 8)

    def __post_init__(self):
        if self.n < 1:
            raise InputError("n must be at least 1")
        if self.k_max < 1:
            raise InputError("k_max must be at least 1")
        object.__setattr__(self, "base", as_scalar(self.base))
        object.__setattr__(self, "eps", as_scalar(self.eps))
        pow_base(self.base, 0)
        if scalar_cmp(self.eps, 0) <= 0:
            raise InputError("eps must be positive")

    @classmethod
    def from_config(cls, n: int, config: Config) -> "FlowParams":
        return cls(n=n, base=config.flow_base, k_max=config.k_max, eps=config.eps)

    def g_factors(self, k: int) -> list[Scalar]:
        """Diagonal of g_k = diag(b^{nk}, b^{-k}, ..., b^{-k})."""
        return [pow_base(self.base, self.n * k)] + [pow_base(self.base, -k)] * self.n


class Divergence(str, Enum):
    DECAYS_TO_ZERO_AT_HORIZON = "DECAYS_TO_ZERO_AT_HORIZON"
    BOUNDED_BELOW_AT_HORIZON = "BOUNDED_BELOW_AT_HORIZON"
    MIXED = "MIXED"


class Classification(NamedTuple):
    kind: Divergence
    floor: Scalar | None = None

    def to_json(self) -> dict:
        return {"kind": self.kind.value, "floor": None if self.floor is None else format_scalar(self.floor)}


class DeltaPoint(NamedTuple):
    k: int
    delta: Scalar
    vector: tuple


@dataclass
class DeltaProfile:
    x: tuple
    params: FlowParams
    values: list[DeltaPoint]
    classification: Classification | None = None
    horizon: dict = field(default_factory=dict)

    def deltas(self) -> list[Scalar]:
        return [point.delta for point in self.values]

    def to_json(self) -> dict:
        return {
            "x": [format_scalar(t) for t in self.x],
            "base": format_scalar(self.params.base),
            "k_max": self.params.k_max,
            "values": [
                {"k": p.k, "delta": format_scalar(p.delta), "vector": [format_scalar(t) for t in p.vector]}
                for p in self.values
            ],
            "classification": self.classification.to_json() if self.classification else None,
            "horizon": self.horizon,
        }

    def write_csv(self, stream):
        """Plot-ready rows ``k,delta_num,delta_den,delta``; num/den is exact for rational delta."""
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(["k", "delta_num", "delta_den", "delta"])
        for point in self.values:
            approx = rational_approximation(point.delta)
            writer.writerow([point.k, approx.numerator, approx.denominator, format_scalar(point.delta)])


def unipotent_lattice(x) -> LatticeBasis:
    """Columns of u_x: identity with x in the first row, columns 1..n."""
    x = [as_scalar(t) for t in x]
    return LatticeBasis.from_columns(flow_matrix(len(x), 0, 2, x))


def flowed_lattice(x, k: int, params: FlowParams) -> LatticeBasis:
    return unipotent_lattice(x).scale_coordinates(params.g_factors(k))


def delta_at(x, k: int, params: FlowParams, config: Config | None = None) -> DeltaPoint:
    shortest = shortest_vector(flowed_lattice(x, k, params), config)
    return DeltaPoint(k, shortest.norm, shortest.vector)


def delta_profile(x, params: FlowParams, config: Config | None = None) -> DeltaProfile:
    """delta_k = delta(g_k u_x Z^{n+1}) for k = 0..k_max, classified at the horizon."""
    config = config or Config()
    x = tuple(as_scalar(t) for t in x)
    if len(x) != params.n:
        raise InputError(f"x has length {len(x)}, expected n={params.n}")
    ks = range(params.k_max + 1)
    if config.threads > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            values = list(pool.map(lambda k: delta_at(x, k, params, config), ks))
    else:
        values = [delta_at(x, k, params, config) for k in ks]
    logger.info("delta profile for x=%s: %s values", [format_scalar(t) for t in x], len(values))
    profile = DeltaProfile(x, params, values)
    profile.classification = classify_divergence(profile, params.eps, config.top_quartile)
    profile.horizon = {"k_max": params.k_max, "eps": format_scalar(params.eps), "base": format_scalar(params.base)}
    return profile


def classify_divergence(profile: DeltaProfile, eps, top_quartile: Fraction = Fraction(1, 4)) -> Classification:
    """
    DECAYS when the suffix suprema drop below eps on the top quartile of the
    horizon, BOUNDED_BELOW(min delta) when min delta >= eps, MIXED otherwise.
    """
    eps = as_scalar(eps)
    if scalar_cmp(eps, 0) <= 0:
        raise InputError("eps must be positive")
    deltas = profile.deltas()
    suffix_sup, running = [], None
    for delta in reversed(deltas):
        running = delta if running is None else scalar_max([running, delta])
        suffix_sup.append(running)
    suffix_sup.reverse()
    start = min(math.ceil((1 - top_quartile) * (len(deltas) - 1)), len(deltas) - 1)
    if scalar_cmp(suffix_sup[start], eps) < 0:
        return Classification(Divergence.DECAYS_TO_ZERO_AT_HORIZON)
    floor = min(deltas)
    if scalar_cmp(floor, eps) >= 0:
        return Classification(Divergence.BOUNDED_BELOW_AT_HORIZON, floor)
    return Classification(Divergence.MIXED)


def flowed_covolume(x, gamma: Submodule, k: int, params: FlowParams) -> Scalar:
    """cov(g_k u_x Gamma) through the closed-form action on the wedge of the generators."""
    return sup_norm(flow_action(wedge_all(gamma.basis.vectors), x, k, params.base))


class Violation(NamedTuple):
    gamma: Submodule
    best_covolume: Scalar


@dataclass
class QNDReport:
    k: int
    rho: Scalar
    checked: int
    violations: list[Violation]

    @property
    def holds(self) -> bool:
        return not self.violations

    def to_json(self) -> dict:
        return {
            "k": self.k,
            "rho": format_scalar(self.rho),
            "checked": self.checked,
            "violations": [{"gamma": v.gamma.to_json(), "covolume": format_scalar(v.best_covolume)}
                           for v in self.violations],
        }


def qnd_hypothesis_check(x_samples, k: int, params: FlowParams, rho, coeff_bound: int,
                         config: Config | None = None) -> QNDReport:
    """
    For every primitive Gamma of Z^{n+1} with canonical entries bounded by
    ``coeff_bound``, check max over samples of cov(g_k u_x Gamma) >= rho^rank.
    """
    rho = as_scalar(rho)
    samples = [tuple(as_scalar(t) for t in x) for x in x_samples]
    if not samples:
        raise InputError("at least one sample point is needed")
    checked, violations = 0, []
    for r in range(1, params.n + 2):
        threshold = rho ** r
        for gamma in enumerate_primitive(params.n + 1, r, coeff_bound, config):
            checked += 1
            best = scalar_max(flowed_covolume(x, gamma, k, params) for x in samples)
            if scalar_cmp(best, threshold) < 0:
                violations.append(Violation(gamma, best))
    logger.info("QND check at k=%s: %s submodules, %s violations", k, checked, len(violations))
    return QNDReport(k, rho, checked, violations)


class ChainReport(NamedTuple):
    covolume: Scalar
    delta: Scalar
    rank: int
    applies: bool
    holds: bool


def prop_p2_chain(x, gamma: Submodule, k: int, c, params: FlowParams, config: Config | None = None) -> ChainReport:
    """
    When cov(g_k u_x Gamma) < c^r, the trajectory point has delta <= 2*cov^(1/r) < 2c.
    Both inequalities are decided exactly in r-th powers.
    """
    c = as_scalar(c)
    r = gamma.rank
    cov = flowed_covolume(x, gamma, k, params)
    delta = delta_at(x, k, params, config).delta
    applies = scalar_cmp(cov, c ** r) < 0
    holds = scalar_cmp(delta ** r, Fraction(2) ** r * cov) <= 0
    if applies:
        holds = holds and scalar_cmp(delta, 2 * c) < 0
    logger.debug("p2 chain k=%s: cov=%s delta=%s", k, to_mpf(cov), to_mpf(delta))
    return ChainReport(cov, delta, r, applies, holds)
