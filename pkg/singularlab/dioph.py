"""
Direct Diophantine tests: best affine approximation, horizon-bounded
singularity verdicts, uniform-exponent estimates and a continued-fraction
oracle for the one-dimensional case.
"""
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from functools import cmp_to_key
from itertools import product
from typing import Iterator, NamedTuple

import mpmath

from singularlab.config import Config
from singularlab.exceptions import (
    BoxOverflow, DimensionTooLarge, InputError, RationalDegenerate, UndecidableComparison,
)
from singularlab.lattice import LatticeBasis, compare_candidates, lattice_points_in_box, shortest_vector, vector_sup
from singularlab.numeric import (
    HPFloat, Scalar, as_scalar, below_power, format_scalar, is_zero, nearest_integer, power_floor, scalar_cmp,
    scalar_max, to_mpf,
)

logger = logging.getLogger(__name__)


class Verdict(str, Enum):
    WITNESSED = "WITNESSED"
    REFUTED = "REFUTED"
    INCONCLUSIVE = "INCONCLUSIVE"


def as_matrix(A) -> tuple[tuple[Scalar, ...], ...]:
    rows = tuple(tuple(as_scalar(x) for x in row) for row in A)
    if not rows or not rows[0] or any(len(row) != len(rows[0]) for row in rows):
        raise InputError("matrix must be a non-empty rectangular list of rows")
    return rows


def _check_schedule(schedule) -> tuple[int, ...]:
    schedule = tuple(int(Q) for Q in schedule)
    if not schedule or schedule[0] < 1 or any(a >= b for a, b in zip(schedule, schedule[1:])):
        raise InputError("Q schedule must be a non-empty strictly increasing list of positive integers")
    return schedule


@dataclass(frozen=True)
class SingularityQuery:
    """
    Solve ||Aq + p|| < c / Q^omega with 0 < ||q|| <= Q for every Q of the schedule.

    ``box_factor`` switches to the strict box ||q|| < box_factor * Q used by
    the j = 1 condition of a parametrized subspace.
    """
    matrix: tuple
    c: Scalar
    schedule: tuple
    omega: Fraction | None = None
    box_factor: Scalar | None = None
    onset_fraction: Fraction = Fraction(1, 2)

    def __post_init__(self):
        matrix = as_matrix(self.matrix)
        object.__setattr__(self, "matrix", matrix)
        object.__setattr__(self, "c", as_scalar(self.c))
        object.__setattr__(self, "schedule", _check_schedule(self.schedule))
        omega = Fraction(len(matrix[0]), len(matrix)) if self.omega is None else Fraction(self.omega)
        if omega < 0:
            raise InputError("omega must be non-negative")
        object.__setattr__(self, "omega", omega)
        if scalar_cmp(self.c, 0) <= 0:
            raise InputError("c must be positive")
        if self.box_factor is not None:
            object.__setattr__(self, "box_factor", as_scalar(self.box_factor))

    @classmethod
    def for_vector(cls, x, c, schedule, **kwargs) -> "SingularityQuery":
        """|q . x + q_0| < c / Q^n: the 1 x n matrix [x], omega = n."""
        return cls(matrix=(tuple(x),), c=c, schedule=schedule, **kwargs)

    def onset_index(self) -> int:
        return min(int(len(self.schedule) * Fraction(self.onset_fraction)), len(self.schedule) - 1)

    def search_bound(self, Q: int) -> int:
        if self.box_factor is None:
            return Q
        return math.ceil(self.box_factor * Q) - 1

    def horizon(self) -> dict:
        return {
            "c": format_scalar(self.c),
            "omega": str(self.omega),
            "schedule": list(self.schedule),
            "onset": self.onset_index(),
            "box_factor": None if self.box_factor is None else format_scalar(self.box_factor),
        }


class ApproxResult(NamedTuple):
    q: tuple[int, ...]
    p: tuple[int, ...]
    err: Scalar

    def to_json(self) -> dict:
        return {"q": list(self.q), "p": list(self.p), "err": format_scalar(self.err)}


@dataclass
class QRecord:
    Q: int
    threshold: str
    solved: bool | None
    best: ApproxResult | None = None
    reason: str | None = None

    def to_json(self) -> dict:
        return {
            "Q": self.Q,
            "threshold": self.threshold,
            "solved": self.solved,
            "best": self.best.to_json() if self.best else None,
            "reason": self.reason,
        }


@dataclass
class HorizonVerdict:
    status: Verdict
    records: list[QRecord]
    refuting_Q: int | None = None
    horizon: dict = field(default_factory=dict)

    def solvability(self) -> dict[int, bool | None]:
        return {record.Q: record.solved for record in self.records}

    def to_json(self) -> dict:
        return {
            "status": self.status.value,
            "refuting_Q": self.refuting_Q,
            "horizon": self.horizon,
            "records": [record.to_json() for record in self.records],
        }


def aggregate(solved: list[bool | None], onset: int) -> tuple[Verdict, int | None]:
    """REFUTED at the first unsolvable index past onset, else INCONCLUSIVE if undecided, else WITNESSED."""
    tail = list(enumerate(solved))[onset:]
    refuting = next((i for i, s in tail if s is False), None)
    if refuting is not None:
        return Verdict.REFUTED, refuting
    if any(s is None for _, s in tail):
        return Verdict.INCONCLUSIVE, None
    return Verdict.WITNESSED, None


def residual(A, q) -> tuple[tuple[int, ...], Scalar]:
    """p = -nearest(Aq) componentwise and err = ||Aq + p||."""
    p, err = [], Fraction(0)
    for row in A:
        value = sum((a * x for a, x in zip(row, q) if x), Fraction(0))
        nearest = nearest_integer(value)
        p.append(-nearest)
        err = scalar_max([err, abs(value - nearest)])
    return tuple(p), err


def _compare_results(u: ApproxResult, v: ApproxResult) -> int:
    if u.q == v.q:
        return 0
    order = scalar_cmp(u.err, v.err)
    if order:
        return int(order)
    return compare_candidates(u.q, v.q)


_preference = cmp_to_key(_compare_results)


def _normalized(q) -> tuple[int, ...]:
    lead = next((x for x in q if x), 0)
    return tuple(-x for x in q) if lead < 0 else tuple(q)


def dirichlet_bound(k: int, l: int, Q: int) -> Fraction:
    """A rational upper bound for the best error at Q (Minkowski's linear forms theorem)."""
    return Fraction(1, power_floor(Q, Fraction(l, k)))


def _zero_error_vector(A, config: Config) -> ApproxResult | None:
    """Shortest q with Aq integral, for rational A (embedding with a heavy first block)."""
    k, l = len(A), len(A[0])
    if k + l > config.svp_dim_cap:
        return None
    d = math.lcm(*(x.denominator for row in A for x in row))
    weight = d * d + 1
    basis = [tuple(Fraction(weight if t == i else 0) for t in range(k)) + (Fraction(0),) * l for i in range(k)]
    for j in range(l):
        column = tuple(weight * A[i][j] for i in range(k))
        basis.append(column + tuple(Fraction(int(t == j)) for t in range(l)))
    shortest = shortest_vector(LatticeBasis(tuple(basis)), config)
    p, q = shortest.coefficients[:k], shortest.coefficients[k:]
    return ApproxResult(tuple(q), tuple(p), Fraction(0))


def _exhaustive(A, bound: int) -> ApproxResult:
    best = None
    for q in product(range(-bound, bound + 1), repeat=len(A[0])):
        if next((x for x in q if x), 0) <= 0:
            continue
        p, err = residual(A, q)
        candidate = ApproxResult(q, p, err)
        if best is None or _preference(candidate) < _preference(best):
            best = candidate
    return best


def _lattice_search(A, bound: int, ceiling: Scalar, config: Config) -> ApproxResult:
    """Exact search over every (q, p) with ||Aq + p|| <= ceiling and ||q|| <= bound."""
    k, l = len(A), len(A[0])
    t = 1 / ceiling
    basis = [tuple(t if s == i else Fraction(0) for s in range(k)) + (Fraction(0),) * l for i in range(k)]
    for j in range(l):
        basis.append(tuple(t * A[i][j] for i in range(k))
                     + tuple(Fraction(1, bound) if s == j else Fraction(0) for s in range(l)))
    best = None
    for point in lattice_points_in_box(LatticeBasis(tuple(basis)), 1, config):
        q = point.coefficients[k:]
        if not any(q):
            continue
        q = _normalized(q)
        p, err = residual(A, q)
        candidate = ApproxResult(q, p, err)
        if best is None or _preference(candidate) < _preference(best):
            best = candidate
    return best


def best_affine_approx(A, Q: int, config: Config | None = None) -> ApproxResult:
    """
    Minimize ||Aq + p|| over nonzero integer q with ||q|| <= Q, p the nearest
    integer vector to -Aq. Ties go to the smaller sup norm of q, then the
    smaller Euclidean norm, then the lexicographically larger normalized q.
    """
    config = config or Config()
    A = as_matrix(A)
    if Q < 1:
        raise InputError(f"Q must be at least 1, got {Q}")
    k, l = len(A), len(A[0])
    e1 = tuple(int(j == 0) for j in range(l))
    p1, err1 = residual(A, e1)
    if is_zero(err1):
        return ApproxResult(e1, p1, err1)
    if all(isinstance(x, Fraction) for row in A for x in row):
        zero = _zero_error_vector(A, config)
        if zero is not None and vector_sup(zero.q) <= Q:
            return zero
    if ((2 * Q + 1) ** l - 1) // 2 <= config.exhaustive_budget:
        return _exhaustive(A, Q)
    ceiling = min(err1, dirichlet_bound(k, l, Q))
    return _lattice_search(A, Q, ceiling, config)


def best_approx_table(A, Q_max: int) -> list[ApproxResult]:
    """Running best for every Q = 1..Q_max of a 1 x 1 matrix, in one incremental scan."""
    A = as_matrix(A)
    if len(A) != 1 or len(A[0]) != 1:
        raise InputError("best_approx_table handles 1 x 1 matrices")
    table, best = [], None
    for q in range(1, Q_max + 1):
        p, err = residual(A, (q,))
        if best is None or scalar_cmp(err, best.err) < 0:
            best = ApproxResult((q,), p, err)
        table.append(best)
    return table


def singular_test(query: SingularityQuery, config: Config | None = None) -> HorizonVerdict:
    """Per-Q best approximation against c / Q^omega, aggregated past the onset index."""
    config = config or Config()
    records = []
    for Q in query.schedule:
        threshold = f"{format_scalar(query.c)}/{Q}^{query.omega}"
        bound = query.search_bound(Q)
        if bound < 1:
            records.append(QRecord(Q, threshold, False, reason="empty search box"))
            continue
        try:
            best = best_affine_approx(query.matrix, bound, config)
            solved = below_power(best.err, query.c, Q, query.omega)
        except (UndecidableComparison, BoxOverflow, DimensionTooLarge) as exc:
            logger.info("Q=%s left undecided: %s", Q, exc.detail)
            records.append(QRecord(Q, threshold, None, reason=f"{exc.code}: {exc.detail}"))
            continue
        logger.debug("Q=%s best=%s solved=%s", Q, best, solved)
        records.append(QRecord(Q, threshold, solved, best))
    status, index = aggregate([r.solved for r in records], query.onset_index())
    refuting = records[index].Q if index is not None else None
    return HorizonVerdict(status, records, refuting, query.horizon())


class OmegaHatReport(NamedTuple):
    estimates: list[tuple[int, mpmath.mpf]]
    summary: mpmath.mpf
    onset: int

    def to_json(self) -> dict:
        return {
            "estimates": [{"Q": Q, "omega": mpmath.nstr(w, 12)} for Q, w in self.estimates],
            "summary": mpmath.nstr(self.summary, 12),
            "onset": self.onset,
        }


def omega_hat_estimate(A, schedule, config: Config | None = None) -> OmegaHatReport:
    """
    omega_Q = -log(best err at Q) / log Q, and the infimum over the schedule
    tail as the horizon estimate of the uniform exponent.
    """
    config = config or Config()
    schedule = [Q for Q in _check_schedule(schedule) if Q > 1]
    if not schedule:
        raise InputError("the schedule needs some Q > 1")
    estimates = []
    with mpmath.workprec(config.precision_bits):
        for Q in schedule:
            err = best_affine_approx(A, Q, config).err
            if is_zero(err):
                raise RationalDegenerate(
                    f"exact solution at Q={Q}: omega-hat = infinity at horizon, A rational-commensurable",
                    estimates,
                )
            estimates.append((Q, -mpmath.log(to_mpf(err, config.precision_bits)) / mpmath.log(Q)))
    onset = config.onset_index(len(estimates))
    summary = min(w for _, w in estimates[onset:])
    return OmegaHatReport(estimates, summary, onset)


def convergents(alpha) -> Iterator[tuple[int, int]]:
    """Continued-fraction convergents h/k of a rational or quadratic irrational, in order."""
    x = as_scalar(alpha)
    if isinstance(x, HPFloat):
        raise InputError("convergents need an exact rational or quadratic irrational")
    h_prev, h = 0, 1
    k_prev, k = 1, 0
    while True:
        a = math.floor(x)
        h_prev, h = h, a * h + h_prev
        k_prev, k = k, a * k + k_prev
        yield h, k
        rest = x - a
        if is_zero(rest):
            return
        x = 1 / rest


def _cf_candidates(alpha, Q: int) -> list[int]:
    """Convergent and intermediate-fraction denominators up to Q."""
    denominators = [1]
    older, previous = 1, 0
    for _, k in convergents(alpha):
        if previous:
            steps = (k - older) // previous
            denominators += [d for d in (older + t * previous for t in range(1, steps)) if d <= Q]
        if k > Q:
            break
        denominators.append(k)
        older, previous = previous, k
    return sorted(set(denominators))


def _cf_pick(alpha, denominators) -> tuple[int, int, Scalar]:
    best = None
    for q in sorted(denominators):
        value = q * alpha
        p = nearest_integer(value)
        err = abs(value - p)
        if best is None or scalar_cmp(err, best[2]) < 0:
            best = (p, q, err)
    return best


def cf_oracle(alpha, Q: int) -> tuple[int, int, Scalar]:
    """Best p/q with q <= Q minimizing |q*alpha - p|, over convergents and intermediate fractions."""
    alpha = as_scalar(alpha)
    if Q < 1:
        raise InputError(f"Q must be at least 1, got {Q}")
    return _cf_pick(alpha, _cf_candidates(alpha, Q))


def cf_best_table(alpha, Q_max: int) -> list[tuple[int, int, Scalar]]:
    """cf_oracle for every Q = 1..Q_max."""
    alpha = as_scalar(alpha)
    candidates = _cf_candidates(alpha, Q_max)
    table, current = [], None
    for Q in range(1, Q_max + 1):
        if current is None or Q in candidates:
            current = _cf_pick(alpha, [q for q in candidates if q <= Q])
        table.append(current)
    return table

