"""
Parametrized affine subspaces L_A = {(x, x~A)} of R^n and the no-small-solution
conditions on integer multivectors that decide whether almost every point of
L_A is singular, checked on a finite Q schedule.
"""
import logging
import math
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum
from fractions import Fraction
from itertools import combinations, product

from sympy import Matrix, Rational
from sympy.core.intfunc import igcdex

from singularlab.config import Config
from singularlab.dioph import SingularityQuery, Verdict, aggregate, as_matrix, best_affine_approx, singular_test
from singularlab.exceptions import (
    BoxOverflow, CertificateInvalid, InputError, NotApplicable, SingularB, UndecidableComparison,
)
from singularlab.exterior import (
    CDecomposition, MultiVector, c_decompose, insertion_sign, project_pi, project_pi_bullet, sup_norm,
)
from singularlab.numeric import (
    HPFloat, Scalar, as_scalar, below_power, format_scalar, is_zero, power_floor, scalar_cmp, scalar_max,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SubspaceParam:
    """x -> (x, x~A) with x~ = (1, x); A is (s+1) x (n-s), first row a_0, the rest A_0."""
    n: int
    s: int
    A: tuple

    def __post_init__(self):
        if not 0 <= self.s <= self.n - 1:
            raise InputError(f"need 0 <= s <= n-1, got n={self.n}, s={self.s}")
        A = as_matrix(self.A)
        if len(A) != self.s + 1 or len(A[0]) != self.n - self.s:
            raise InputError(f"A must be {self.s + 1} x {self.n - self.s}, got {len(A)} x {len(A[0])}")
        object.__setattr__(self, "A", A)

    @classmethod
    def from_matrix(cls, A) -> "SubspaceParam":
        A = as_matrix(A)
        return cls(n=len(A) + len(A[0]) - 1, s=len(A) - 1, A=A)

    @property
    def is_rational(self) -> bool:
        return all(isinstance(x, Fraction) for row in self.A for x in row)

    def to_json(self) -> dict:
        return {"n": self.n, "s": self.s, "A": [[format_scalar(x) for x in row] for row in self.A]}


def embed_point(P: SubspaceParam, x) -> tuple:
    """(x, x~A)."""
    x = tuple(as_scalar(t) for t in x)
    if len(x) != P.s:
        raise InputError(f"x has length {len(x)}, expected s={P.s}")
    xt = (Fraction(1),) + x
    tail = tuple(sum((xt[i] * P.A[i][t] for i in range(P.s + 1)), Fraction(0)) for t in range(P.n - P.s))
    return x + tail


def contains(P: SubspaceParam, y) -> bool:
    """Exact membership; a high-precision coordinate passes when its enclosure admits equality."""
    y = tuple(as_scalar(t) for t in y)
    if len(y) != P.n:
        raise InputError(f"point has length {len(y)}, expected n={P.n}")
    for given, expected in zip(y[P.s:], embed_point(P, y[:P.s])[P.s:]):
        gap = given - expected
        if isinstance(gap, HPFloat):
            if not gap.contains(0):
                return False
        elif not is_zero(gap):
            return False
    return True


def r_matrix(P: SubspaceParam) -> list[list[Scalar]]:
    """R_A = [I_{s+1} | A]."""
    return [[Fraction(int(i == t)) for t in range(P.s + 1)] + list(P.A[i]) for i in range(P.s + 1)]


def apply_RA(P: SubspaceParam, c: CDecomposition) -> tuple[MultiVector, ...]:
    """Entry i is c(w)_i + sum_{t > s} A[i][t-s-1] c(w)_t."""
    if c.n != P.n:
        raise InputError(f"decomposition has {c.n + 1} parts, expected {P.n + 1}")
    entries = []
    for i in range(P.s + 1):
        entry = c.parts[i]
        for t in range(P.s + 1, P.n + 1):
            weight = P.A[i][t - P.s - 1]
            if not is_zero(weight) and not c.parts[t].is_zero():
                entry = entry + c.parts[t].scale(weight)
        entries.append(entry)
    return tuple(entries)


def ra_norm(P: SubspaceParam, w: MultiVector) -> Scalar:
    return scalar_max(sup_norm(entry) for entry in apply_RA(P, c_decompose(w)))


class Projection(str, Enum):
    PI_BULLET = "pi_bullet"
    PI = "pi"


class Mode(str, Enum):
    TWO_STAR = "two_star"
    OMEGA = "omega"


def project(w: MultiVector, s: int, projection: Projection) -> MultiVector:
    if projection is Projection.PI:
        return project_pi(w)
    return project_pi_bullet(w, s)


@dataclass(frozen=True)
class ConditionQuery:
    param: SubspaceParam
    c: Scalar
    schedule: tuple
    j_range: tuple | None = None
    projection: Projection = Projection.PI_BULLET
    mode: Mode = Mode.TWO_STAR
    omega: Fraction | None = None
    onset_fraction: Fraction = Fraction(1, 2)
    sensitivity: bool = False

    def __post_init__(self):
        P = self.param
        object.__setattr__(self, "c", as_scalar(self.c))
        if scalar_cmp(self.c, 0) <= 0:
            raise InputError("c must be positive")
        schedule = tuple(int(Q) for Q in self.schedule)
        if not schedule or schedule[0] < 1 or any(a >= b for a, b in zip(schedule, schedule[1:])):
            raise InputError("Q schedule must be a non-empty strictly increasing list of positive integers")
        object.__setattr__(self, "schedule", schedule)
        object.__setattr__(self, "projection", Projection(self.projection))
        object.__setattr__(self, "mode", Mode(self.mode))
        top = P.n - P.s if self.projection is Projection.PI_BULLET else P.n
        j_range = tuple(self.j_range) if self.j_range else tuple(range(1, P.n - P.s + 1))
        if any(not 1 <= j <= top for j in j_range):
            raise InputError(f"j must lie in 1..{top} for projection {self.projection.value}")
        object.__setattr__(self, "j_range", j_range)
        if self.mode is Mode.OMEGA:
            if self.omega is None:
                raise InputError("omega mode needs an exponent")
            object.__setattr__(self, "omega", Fraction(self.omega))

    def thresholds(self, Q: int, j: int) -> tuple[Scalar, Fraction, Scalar]:
        """(numerator, exponent, T2): the system is ||R_A c(w)|| < numerator / Q^exponent, ||proj w|| < T2."""
        cj = self.c ** j
        if self.mode is Mode.TWO_STAR:
            return cj, Fraction(self.param.n - j + 1), cj * Q ** j
        return cj, self.omega, cj * Q

    def onset_index(self) -> int:
        return min(int(len(self.schedule) * Fraction(self.onset_fraction)), len(self.schedule) - 1)

    def horizon(self) -> dict:
        return {
            "c": format_scalar(self.c),
            "schedule": list(self.schedule),
            "j_range": list(self.j_range),
            "projection": self.projection.value,
            "mode": self.mode.value,
            "omega": None if self.omega is None else str(self.omega),
            "onset": self.onset_index(),
        }


@dataclass
class CellResult:
    Q: int
    j: int
    solved: bool | None
    solutions: list[MultiVector] = field(default_factory=list)
    reason: str | None = None
    conservative_box: dict | None = None

    def to_json(self) -> dict:
        return {
            "Q": self.Q,
            "j": self.j,
            "solved": self.solved,
            "reason": self.reason,
            "solutions": [w.to_json() for w in self.solutions],
            "conservative_box": self.conservative_box,
        }


class ConditionStatus(str, Enum):
    SATISFIED = "SATISFIED"
    VIOLATED = "VIOLATED"
    INCONCLUSIVE = "INCONCLUSIVE"


@dataclass
class ConditionReport:
    status: ConditionStatus
    cells: list[CellResult]
    satisfying_Q: int | None = None
    horizon: dict = field(default_factory=dict)

    def solvability(self) -> dict[tuple[int, int], bool | None]:
        return {(cell.Q, cell.j): cell.solved for cell in self.cells}

    def per_Q(self) -> dict[int, bool | None]:
        """True when some j has a solution, False when every j has none, None otherwise."""
        table = {}
        for cell in self.cells:
            table.setdefault(cell.Q, []).append(cell.solved)
        return {Q: True if True in v else (False if all(s is False for s in v) else None) for Q, v in table.items()}

    def certificates(self) -> list[tuple[int, int, MultiVector]]:
        found = [(cell.Q, cell.j, w) for cell in self.cells for w in cell.solutions]
        return sorted(found, key=lambda item: (item[0], item[1], item[2].sort_key()))

    def to_json(self) -> dict:
        return {
            "status": self.status.value,
            "satisfying_Q": self.satisfying_Q,
            "horizon": self.horizon,
            "cells": [cell.to_json() for cell in self.cells],
            "certificates": [{"Q": Q, "j": j, "w": w.to_json()} for Q, j, w in self.certificates()],
        }


def _open_interval(center, half_width) -> tuple[int, int]:
    """Integers strictly inside (center - half_width, center + half_width)."""
    return math.floor(center - half_width) + 1, math.ceil(center + half_width) - 1


def _leading_positive(w: MultiVector) -> bool:
    first = min(w.coeffs)
    return w.coeffs[first] > 0


def _conservative_box(P: SubspaceParam, j: int, t1_hi, T2, constant) -> int:
    """Box size of the coarse bound |w_I| <= T1 + K (n-s) max|A| T2 binom(n, j) off pi_bullet."""
    n, s = P.n, P.s
    free = math.comb(n - s, j)
    rest = math.comb(n + 1, j) - free
    peak = scalar_max(abs(x) for row in P.A for x in row)
    other = math.floor(t1_hi + constant * (n - s) * peak * T2 * math.comb(n, j))
    return (2 * (math.ceil(T2) - 1) + 1) ** free * (2 * other + 1) ** rest


def solve_cell(query: ConditionQuery, Q: int, j: int, config: Config) -> CellResult:
    """
    Every normalized nonzero w of grade j solving the (Q, j) system.

    Coefficients on pi_bullet range over |w_I| < T2; every other coefficient
    is pinned, through one identity-block row of R_A, to an interval of
    half-width T1 around a combination of coefficients with fewer low indices.
    """
    P, n, s = query.param, query.param.n, query.param.s
    numerator, exponent, T2 = query.thresholds(Q, j)
    t1_hi = numerator / power_floor(Q, exponent)
    t2_max = math.ceil(T2) - 1
    index_sets = list(combinations(range(n + 1), j))
    level = {I: sum(1 for i in I if i <= s) for I in index_sets}
    free = [I for I in index_sets if level[I] == 0]
    derived = sorted((I for I in index_sets if level[I] > 0), key=lambda I: (level[I], I))
    size = (2 * t2_max + 1) ** len(free)
    if size > config.box_budget:
        raise BoxOverflow(f"cell Q={Q}, j={j}: {size} free assignments exceed the budget of {config.box_budget}")

    constraints = {}
    for I in derived:
        sources = [0] if 0 in I else [i for i in I if 1 <= i <= s]
        rules = []
        for i in sources:
            J = tuple(t for t in I if t != i)
            terms = []
            for t in range(s + 1, n + 1):
                weight = P.A[i][t - s - 1]
                if t in J or is_zero(weight):
                    continue
                terms.append((weight if insertion_sign(t, J) > 0 else -weight, tuple(sorted(J + (t,)))))
            rules.append((insertion_sign(i, J), terms))
        constraints[I] = rules
    bounded_by_t2 = {I for I in derived if query.projection is Projection.PI and 0 not in I}

    def candidates(I, values):
        lo, hi = (-t2_max, t2_max) if I in bounded_by_t2 else (None, None)
        for sign, terms in constraints[I]:
            total = sum((weight * values[K] for weight, K in terms if values[K]), Fraction(0))
            a, b = _open_interval(-total if sign > 0 else total, t1_hi)
            lo = a if lo is None else max(lo, a)
            hi = b if hi is None else min(hi, b)
        return range(lo, hi + 1)

    def extend(position, values):
        if position == len(derived):
            yield values
            return
        I = derived[position]
        for v in candidates(I, values):
            values[I] = v
            yield from extend(position + 1, values)
        values.pop(I, None)

    solutions = []
    for assignment in product(range(-t2_max, t2_max + 1), repeat=len(free)):
        values = dict(zip(free, assignment))
        for full in extend(0, values):
            w = MultiVector(n + 1, j, full)
            if w.is_zero() or not _leading_positive(w):
                continue
            projected = project(w, s, query.projection)
            # a grade-one solution needs q != 0
            if j == 1 and projected.is_zero():
                continue
            if not below_power(ra_norm(P, w), numerator, Q, exponent):
                continue
            if scalar_cmp(sup_norm(projected), T2) >= 0:
                continue
            solutions.append(w)
    solutions.sort(key=MultiVector.sort_key)

    box = None
    if query.sensitivity:
        constants = sorted({Fraction(1), Fraction(2), Fraction(config.lemma51_constant)})
        box = {str(K): _conservative_box(P, j, t1_hi, T2, K) for K in constants}
    logger.debug("cell Q=%s j=%s: %s solutions", Q, j, len(solutions))
    return CellResult(Q, j, bool(solutions), solutions, conservative_box=box)


def _run_cell(query: ConditionQuery, Q: int, j: int, config: Config) -> CellResult:
    try:
        return solve_cell(query, Q, j, config)
    except UndecidableComparison as exc:
        logger.info("cell Q=%s j=%s undecided: %s", Q, j, exc.detail)
        return CellResult(Q, j, None, reason=f"{exc.code}: {exc.detail}")


def _report(query: ConditionQuery, cells: list[CellResult]) -> ConditionReport:
    report = ConditionReport(ConditionStatus.INCONCLUSIVE, cells, horizon=query.horizon())
    per_Q = report.per_Q()
    solved = [per_Q[Q] for Q in query.schedule]
    verdict, index = aggregate(solved, query.onset_index())
    if verdict is Verdict.REFUTED:
        report.status, report.satisfying_Q = ConditionStatus.SATISFIED, query.schedule[index]
    elif verdict is Verdict.WITNESSED:
        report.status = ConditionStatus.VIOLATED
    return report


def condition_check(query: ConditionQuery, config: Config | None = None) -> ConditionReport:
    """
    SATISFIED at horizon when some Q past onset admits no solution for any j in
    range, VIOLATED when every such Q has one, INCONCLUSIVE otherwise.
    Raises BoxOverflow instead of truncating a search.
    """
    config = config or Config()
    grid = [(Q, j) for Q in query.schedule for j in query.j_range]
    if config.threads > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            cells = list(pool.map(lambda cell: _run_cell(query, *cell, config), grid))
    else:
        cells = [_run_cell(query, Q, j, config) for Q, j in grid]
    report = _report(query, cells)
    logger.info("condition check n=%s s=%s: %s", query.param.n, query.param.s, report.status.value)
    return report


def condition_two_star_via_omega(query: ConditionQuery, config: Config | None = None,
                                 ambient_n: int | None = None) -> ConditionReport:
    """
    The two-star system at (Q, j) is the omega = (n-j+1)/j system at Q^j; rerun it that way.

    ``ambient_n`` keeps the exponents of a larger L_A when ``query.param`` is its row reduction.
    """
    P = query.param
    n = P.n if ambient_n is None else ambient_n
    cells = []
    for j in query.j_range:
        lifted = replace(query, schedule=tuple(Q ** j for Q in query.schedule), j_range=(j,),
                         mode=Mode.OMEGA, omega=Fraction(n - j + 1, j))
        for Q, cell in zip(query.schedule, condition_check(lifted, config).cells):
            cells.append(replace(cell, Q=Q))
    cells.sort(key=lambda cell: (cell.Q, cell.j))
    return _report(query, cells)


def _check_permutation(sigma, size: int) -> tuple[int, ...]:
    sigma = tuple(int(i) for i in sigma)
    if sorted(sigma) != list(range(size)):
        raise InputError(f"{list(sigma)} is not a permutation of 0..{size - 1}")
    return sigma


def permute_rows(P: SubspaceParam, sigma) -> SubspaceParam:
    """Row i of the result is row sigma[i] of A."""
    sigma = _check_permutation(sigma, P.s + 1)
    return SubspaceParam(P.n, P.s, tuple(P.A[i] for i in sigma))


def achievable_norm_pairs(P: SubspaceParam, j: int, box: int,
                          projection: Projection = Projection.PI_BULLET) -> Counter:
    """Multiset of (||R_A c(w)||, ||proj w||) over nonzero w with coefficients in [-box, box]."""
    index_sets = list(combinations(range(P.n + 1), j))
    pairs = Counter()
    for coeffs in product(range(-box, box + 1), repeat=len(index_sets)):
        if not any(coeffs):
            continue
        w = MultiVector(P.n + 1, j, dict(zip(index_sets, coeffs)))
        pairs[(format_scalar(ra_norm(P, w)), format_scalar(sup_norm(project(w, P.s, projection))))] += 1
    return pairs


def solvability_table(query: ConditionQuery, config: Config | None = None) -> dict:
    return condition_check(query, config).solvability()


def _rational_matrix(B, size: int) -> tuple[tuple[Fraction, ...], ...]:
    B = as_matrix(B)
    if len(B) != size or len(B[0]) != size:
        raise InputError(f"B must be {size} x {size}")
    if not all(isinstance(x, Fraction) for row in B for x in row):
        raise InputError("B must have rational entries")
    return B


def left_multiply(P: SubspaceParam, B) -> SubspaceParam:
    """A' = BA for B in GL_{s+1}(Q)."""
    B = _rational_matrix(B, P.s + 1)
    if Matrix([[Rational(x.numerator, x.denominator) for x in row] for row in B]).det() == 0:
        raise SingularB("B is not invertible over the rationals")
    cols = P.n - P.s
    A = tuple(
        tuple(sum((B[i][r] * P.A[r][t] for r in range(P.s + 1) if B[i][r]), Fraction(0)) for t in range(cols))
        for i in range(P.s + 1)
    )
    return SubspaceParam(P.n, P.s, A)


def transfer_solution(P: SubspaceParam, B, w: MultiVector) -> tuple[MultiVector, Fraction]:
    """
    Map a grade-1 solution w = (p, q) for A to w' = (dBp, dq) for A' = BA, with d
    the common denominator of B. Returns w' and C = d * max(1, max row sum |B|),
    so that ||R_{A'} c(w')|| <= C ||R_A c(w)|| and ||w'_q|| <= C ||w_q||.
    """
    B = _rational_matrix(B, P.s + 1)
    if w.grade != 1 or w.dim != P.n + 1:
        raise InputError("transfer_solution handles grade-1 vectors of Z^{n+1}")
    d = math.lcm(*(x.denominator for row in B for x in row))
    p = [w.coefficient((i,)) for i in range(P.s + 1)]
    q = [w.coefficient((t,)) for t in range(P.s + 1, P.n + 1)]
    new_p = [d * sum((B[i][r] * p[r] for r in range(P.s + 1)), Fraction(0)) for i in range(P.s + 1)]
    moved = MultiVector.from_vector(new_p + [d * x for x in q])
    C = d * max(Fraction(1), max(sum(abs(x) for x in row) for row in B))
    return moved, C


def _verify_certificate(P: SubspaceParam, row: int, certificate) -> tuple[int, list[Scalar]]:
    if not 0 <= row <= P.s:
        raise InputError(f"row {row} is out of range 0..{P.s}")
    if P.s < 1:
        raise InputError("a single-row A has no row to remove")
    others = [i for i in range(P.s + 1) if i != row]
    weights = [as_scalar(x) for x in certificate]
    if len(weights) != len(others):
        raise CertificateInvalid(f"certificate needs {len(others)} coefficients, got {len(weights)}")
    if not all(isinstance(x, Fraction) for x in weights):
        raise CertificateInvalid("certificate coefficients must be rational")
    for t in range(P.n - P.s):
        combination = sum((lam * P.A[i][t] for lam, i in zip(weights, others) if lam), Fraction(0))
        if not is_zero(P.A[row][t] - combination):
            raise CertificateInvalid(f"row {row} is not the stated combination of the remaining rows")
    return row, weights


def zero_row_normalization(P: SubspaceParam, row: int, certificate):
    """
    B (subtracting the certified combination from ``row``) and the cyclic sigma
    moving that row to position 0, so that permute_rows(left_multiply(P, B), sigma)
    has a_0 = 0. Returns (B, sigma, normalized).
    """
    row, weights = _verify_certificate(P, row, certificate)
    others = [i for i in range(P.s + 1) if i != row]
    B = [[Fraction(int(i == t)) for t in range(P.s + 1)] for i in range(P.s + 1)]
    for lam, i in zip(weights, others):
        B[row][i] = -lam
    sigma = (row, *others)
    normalized = permute_rows(left_multiply(P, B), sigma)
    return tuple(tuple(r) for r in B), sigma, normalized


def remove_row(P: SubspaceParam, row: int, certificate) -> SubspaceParam:
    """Drop a row that is the certified rational combination of the others: (n, s) -> (n-1, s-1)."""
    row, _ = _verify_certificate(P, row, certificate)
    return SubspaceParam(P.n - 1, P.s - 1, tuple(r for i, r in enumerate(P.A) if i != row))


def lastp_identity(P: SubspaceParam, w: MultiVector) -> tuple[Scalar, Scalar]:
    """
    For a_0 = 0: (||R_A c(w)||, max(||c(w)_0||, ||R_{A'} c(pi(w))||)) with A' the
    remaining rows acting on the parts 1..n of c(pi(w)). The two agree exactly.
    """
    if P.s < 1 or any(not is_zero(x) for x in P.A[0]):
        raise InputError("the identity needs s >= 1 and a zero first row")
    parts = c_decompose(w)
    reduced = SubspaceParam(P.n - 1, P.s - 1, P.A[1:])
    tail = CDecomposition(c_decompose(project_pi(w)).parts[1:])
    rhs = scalar_max([sup_norm(parts.parts[0])] + [sup_norm(entry) for entry in apply_RA(reduced, tail)])
    return ra_norm(P, w), rhs


@dataclass
class EverythingWitness:
    p0: int
    p_prime: tuple
    q: tuple
    error: Scalar
    Q_cert: Scalar
    c_cert: Scalar
    certified: bool

    def to_json(self) -> dict:
        return {
            "p0": self.p0,
            "p_prime": list(self.p_prime),
            "q": list(self.q),
            "error": format_scalar(self.error),
            "Q_cert": format_scalar(self.Q_cert),
            "c_cert": format_scalar(self.c_cert),
            "certified": self.certified,
        }


def everything_witness(P: SubspaceParam, x, Q: int, c, config: Config | None = None) -> EverythingWitness | None:
    """
    Turn a solution of ||Aq + p|| < c/Q^n into the integer triple (p_0, p', q)
    with |p_0 + y.(p'; q)| <= ||x~||_1 ||Aq + p|| for y = (x, x~A).

    With C = max(1, max row sum |A| + 1/2) the vector (p'; q) has norm at most
    C*Q, so the point satisfies the singularity inequality at Q' = C*Q with
    constant c * (s+1) * ||x~|| * C^n. Returns None when no solution exists at Q.
    """
    c = as_scalar(c)
    best = best_affine_approx(P.A, Q, config)
    if not below_power(best.err, c, Q, P.n):
        return None
    y = embed_point(P, x)
    xt = (Fraction(1),) + tuple(as_scalar(t) for t in x)
    vector = best.p[1:] + best.q
    error = abs(best.p[0] + sum((yi * vi for yi, vi in zip(y, vector) if vi), Fraction(0)))
    C = scalar_max([Fraction(1), scalar_max(sum((abs(a) for a in row), Fraction(0)) for row in P.A) + Fraction(1, 2)])
    Q_cert = C * Q
    c_cert = c * (P.s + 1) * scalar_max(abs(t) for t in xt) * C ** P.n
    certified = (scalar_cmp(max(abs(v) for v in vector), Q_cert) <= 0
                 and scalar_cmp(error * Q_cert ** P.n, c_cert) < 0)
    return EverythingWitness(best.p[0], best.p[1:], best.q, error, Q_cert, c_cert, certified)


class Shape(str, Enum):
    ROWS = "ROWS"
    COLUMNS = "COLUMNS"


def _multiples_of_one(vectors) -> bool:
    pivot = next((v for v in vectors if any(not is_zero(x) for x in v)), None)
    if pivot is None:
        return True
    lead = next(t for t, x in enumerate(pivot) if not is_zero(x))
    for v in vectors:
        ratio = v[lead] / pivot[lead]
        if not isinstance(ratio, Fraction):
            return False
        if any(not is_zero(a - ratio * b) for a, b in zip(v, pivot)):
            return False
    return True


def theorem_shape(P: SubspaceParam) -> Shape | None:
    """ROWS when every row is a rational multiple of one row, else COLUMNS likewise, else None."""
    if _multiples_of_one(P.A):
        return Shape.ROWS
    if _multiples_of_one(tuple(zip(*P.A))):
        return Shape.COLUMNS
    return None


@dataclass
class Main3Report:
    shape: Shape
    steps: list[dict]
    status: str
    consistent: bool | None
    conclusion: str
    witnesses: dict | None = None

    def to_json(self) -> dict:
        return {
            "shape": self.shape.value,
            "steps": self.steps,
            "status": self.status,
            "consistent": self.consistent,
            "conclusion": self.conclusion,
            "witnesses": self.witnesses,
        }


def _guarded(run):
    try:
        report = run()
        return report, report.status.value, report.to_json()
    except BoxOverflow as exc:
        return None, ConditionStatus.INCONCLUSIVE.value, exc.to_dict()


def _reduce_to_row(P: SubspaceParam) -> tuple[list[dict], SubspaceParam]:
    """Remove every row but the first nonzero one, each with its rational certificate."""
    trail, current = [], P
    pivot = next((i for i, row in enumerate(P.A) if any(not is_zero(x) for x in row)), 0)
    while current.s > 0:
        row = 1 if pivot == 0 else 0
        others = [i for i in range(current.s + 1) if i != row]
        lead = next((t for t, x in enumerate(current.A[pivot]) if not is_zero(x)), None)
        ratio = Fraction(0) if lead is None else current.A[row][lead] / current.A[pivot][lead]
        certificate = [ratio if i == pivot else Fraction(0) for i in others]
        current = remove_row(current, row, certificate)
        trail.append({"removed": row, "certificate": [str(x) for x in certificate], "result": current.to_json()})
        if row < pivot:
            pivot -= 1
    return trail, current


def _unimodular_to_first(r: list[int]) -> list[list[int]]:
    """Integer U with det U = +-1 and r U = (gcd(r), 0, ..., 0)."""
    m = len(r)
    U = [[int(i == t) for t in range(m)] for i in range(m)]
    a = list(r)
    for k in range(1, m):
        if a[k] == 0:
            continue
        x, y, g = (int(v) for v in igcdex(a[0], a[k]))
        u, v = a[k] // g, a[0] // g
        for row in U:
            row[0], row[k] = x * row[0] + y * row[k], -u * row[0] + v * row[k]
        a[0], a[k] = g, 0
    if a[0] < 0:
        for row in U:
            row[0] = -row[0]
    return U


def _reduce_to_column(P: SubspaceParam) -> dict:
    """
    Columns t = r_t v with r rational. A unimodular U sends r to a multiple of
    e_1, so A U = (g v | 0) and every further column of U is an integer q with
    A q = 0 exactly. Returns U and the shortest such q (None for one column).
    """
    columns = list(zip(*P.A))
    pivot = next(col for col in columns if any(not is_zero(x) for x in col))
    lead = next(i for i, x in enumerate(pivot) if not is_zero(x))
    ratios = [col[lead] / pivot[lead] for col in columns]
    d = math.lcm(*(r.denominator for r in ratios))
    scaled = [int(r * d) for r in ratios]
    g = math.gcd(*scaled)
    U = _unimodular_to_first([x // g for x in scaled])
    kernel = [tuple(row[k] for row in U) for k in range(1, len(U))]
    q = min(kernel, key=lambda v: (max(abs(x) for x in v), v)) if kernel else None
    if q is not None and any(
        not is_zero(sum((a * x for a, x in zip(row, q) if x), Fraction(0))) for row in P.A
    ):
        raise CertificateInvalid(f"column reduction produced q={q} with A q != 0")
    return {"U": U, "scale": str(Fraction(g, d)), "kernel": None if q is None else list(q)}


def _lift_rows(P: SubspaceParam, c: Scalar, schedule, onset: Fraction, config: Config) -> tuple[list[dict], str]:
    """Conditions ((n-j+1)/j, j) for the single row a, carried back to L_A through every removed row."""
    trail, row_param = _reduce_to_row(P)
    steps = [{"step": "reduce to a single row", "status": "DONE", "chain": trail}]
    query = ConditionQuery(row_param, c, schedule, onset_fraction=onset)
    reduced, reduced_status, reduced_json = _guarded(
        lambda: condition_two_star_via_omega(query, config, ambient_n=P.n)
    )
    per_grade = {}
    if reduced is not None:
        for j in query.j_range:
            cells = [cell for cell in reduced.cells if cell.j == j]
            per_grade[str(j)] = _report(replace(query, j_range=(j,)), cells).status.value
    steps.append({
        "step": "conditions ((n-j+1)/j, j) for L_a",
        "status": reduced_status,
        "per_grade": per_grade,
        "report": reduced_json,
    })
    # putting a row back needs ||c(w)_0|| >= 1 to exceed every threshold c^j / Q^(n-j+1)
    lifts = scalar_cmp(c, 1) <= 0
    status = reduced_status if lifts else ConditionStatus.INCONCLUSIVE.value
    steps.append({
        "step": "two-star condition for L_A, reassembled",
        "status": status,
        "lifts": lifts,
        "via": [link["removed"] for link in reversed(trail)],
    })
    return steps, status


def _lift_columns(P: SubspaceParam, c: Scalar, schedule, onset: Fraction,
                  first: ConditionReport) -> tuple[list[dict], str]:
    """One column: a hyperplane, where two-star is the j = 1 condition. More: an exact kernel witness."""
    reduction = _reduce_to_column(P)
    steps = [{"step": "reduce to a single column", "status": "DONE", **reduction}]
    q = reduction["kernel"]
    if q is None:
        status = first.status.value
        steps.append({"step": "two-star condition for L_A, reassembled", "status": status, "via": "hyperplane"})
        return steps, status
    w = MultiVector.from_vector([0] * (P.s + 1) + q)
    reach = max(abs(x) for x in q)
    known = first.per_Q()
    solved = [True if scalar_cmp(reach, c * Q) < 0 else known[Q] for Q in schedule]
    verdict, _ = aggregate(solved, min(int(len(solved) * onset), len(solved) - 1))
    status = {
        Verdict.WITNESSED: ConditionStatus.VIOLATED,
        Verdict.REFUTED: ConditionStatus.SATISFIED,
    }.get(verdict, ConditionStatus.INCONCLUSIVE).value
    steps.append({
        "step": "two-star condition for L_A, reassembled",
        "status": status,
        "via": "kernel witness",
        "certificate": w.to_json(),
        "per_Q": dict(zip((str(Q) for Q in schedule), solved)),
    })
    return steps, status


def theorem_main3_pipeline(P: SubspaceParam, c, schedule, config: Config | None = None,
                           sample_points=None) -> Main3Report:
    """
    Run the reduction chain at horizon for A whose rows (or columns) are
    rational multiples of one.

    ROWS: reduce to the single row a, check ((n-j+1)/j, j) for L_a at Q^j for
    every j and put the removed rows back. COLUMNS: one column is a
    hyperplane; several give an integer q with A q = 0. The direct two-star
    check on L_A runs last and only feeds ``consistent``.
    """
    config = config or Config()
    shape = theorem_shape(P)
    if shape is None:
        raise NotApplicable("neither the rows nor the columns of A are rational multiples of one")
    c = as_scalar(c)
    schedule = tuple(schedule)
    onset = config.onset_fraction
    steps = []

    first = condition_check(ConditionQuery(P, c, schedule, j_range=(1,), onset_fraction=onset), config)
    dioph = singular_test(SingularityQuery(P.A, c, schedule, omega=Fraction(P.n), box_factor=c,
                                           onset_fraction=onset), config)
    steps.append({
        "step": "j=1 condition (n-singularity of A)",
        "status": first.status.value,
        "dioph_status": dioph.status.value,
        "agrees": [first.per_Q()[Q] for Q in first.horizon["schedule"]] == [r.solved for r in dioph.records],
    })

    if shape is Shape.ROWS:
        chain, status = _lift_rows(P, c, schedule, onset, config)
    else:
        chain, status = _lift_columns(P, c, schedule, onset, first)
    steps += chain

    _, direct_status, direct_json = _guarded(
        lambda: condition_check(ConditionQuery(P, c, schedule, onset_fraction=onset), config)
    )
    steps.append({"step": "two-star condition for L_A, direct", "status": direct_status, "report": direct_json})

    undecided = ConditionStatus.INCONCLUSIVE.value
    consistent = None if undecided in (status, direct_status) else status == direct_status
    if consistent is False:
        logger.warning("reassembled %s disagrees with the direct check %s", status, direct_status)

    witnesses = None
    if P.is_rational:
        points = sample_points or [tuple(Fraction(i + 1, i + 2) for _ in range(P.s)) for i in range(3)]
        checked = []
        for Q in list(schedule)[config.onset_index(len(schedule)):]:
            for x in points:
                witness = everything_witness(P, x, Q, c, config)
                checked.append(witness is not None and witness.certified)
        witnesses = {"points": [[str(t) for t in x] for x in points], "all_certified": all(checked)}

    if status == ConditionStatus.SATISFIED.value:
        conclusion = "not n-singular at horizon => Condition (2)* holds at horizon"
    elif status == ConditionStatus.VIOLATED.value:
        conclusion = "n-singular at horizon => every sampled point singular"
    else:
        conclusion = "inconclusive at horizon"
    return Main3Report(shape, steps, status, consistent, conclusion, witnesses)
