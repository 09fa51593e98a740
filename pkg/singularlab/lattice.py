"""
Lattices spanned by exact vectors and integer submodules of Z^m.

Shortest vectors are found by exact enumeration. LLL (on an integer
approximation of the basis) only shrinks the coefficient box; the box itself
comes from the dual basis, so no lattice point inside the sup-norm ball is
ever skipped.
"""
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cmp_to_key
from itertools import combinations, product
from typing import Iterator, NamedTuple

import mpmath
from mpmath.ctx_mp import MPContext
from sympy import Matrix, ZZ
from sympy.matrices.normalforms import hermite_normal_form, smith_normal_decomp
from sympy.polys.matrices import DomainMatrix
from sympy.polys.matrices.exceptions import DMError

from singularlab.config import Config
from singularlab.exceptions import BoxOverflow, DimensionTooLarge, InputError, NumericDomainError
from singularlab.exterior import sup_norm, wedge_all
from singularlab.numeric import (
    Scalar, as_scalar, format_scalar, is_zero, mpf_to_fraction, scalar_cmp, scalar_max, scalar_sign, to_mpf,
)

logger = logging.getLogger(__name__)

# relative slack applied to numerically computed coefficient bounds
_BOUND_SLACK_BITS = 40


def vector_sup(vector) -> Scalar:
    return scalar_max(abs(x) for x in vector)


def _combine(vectors, coefficients) -> tuple:
    out = [Fraction(0)] * len(vectors[0])
    for c, v in zip(coefficients, vectors):
        if c:
            for t, x in enumerate(v):
                out[t] = out[t] + c * x
    return tuple(out)


def _leading_sign(vector) -> int:
    for x in vector:
        if not is_zero(x):
            return scalar_sign(x)
    return 0


@dataclass(frozen=True)
class LatticeBasis:
    """r <= m linearly independent vectors of R^m (exact scalars)."""
    vectors: tuple

    def __post_init__(self):
        vectors = tuple(tuple(as_scalar(x) for x in v) for v in self.vectors)
        if not vectors:
            raise InputError("a lattice basis needs at least one vector")
        dim = len(vectors[0])
        if dim == 0 or any(len(v) != dim for v in vectors):
            raise InputError("basis vectors must share one positive dimension")
        if len(vectors) > dim:
            raise InputError(f"{len(vectors)} vectors cannot be independent in dimension {dim}")
        if wedge_all(vectors).is_zero():
            raise InputError("basis vectors are linearly dependent")
        object.__setattr__(self, "vectors", vectors)

    @classmethod
    def from_columns(cls, matrix) -> "LatticeBasis":
        return cls(tuple(tuple(row[i] for row in matrix) for i in range(len(matrix[0]))))

    @classmethod
    def standard(cls, m: int) -> "LatticeBasis":
        return cls(tuple(tuple(Fraction(int(i == t)) for t in range(m)) for i in range(m)))

    @property
    def dim(self) -> int:
        return len(self.vectors[0])

    @property
    def rank(self) -> int:
        return len(self.vectors)

    def apply(self, coefficients) -> tuple:
        """The lattice point sum_i coefficients[i] * vectors[i]."""
        if len(coefficients) != self.rank:
            raise InputError(f"expected {self.rank} coefficients, got {len(coefficients)}")
        return _combine(self.vectors, coefficients)

    def scale_coordinates(self, factors) -> "LatticeBasis":
        """Image under the diagonal matrix diag(factors)."""
        return LatticeBasis(tuple(tuple(f * x for f, x in zip(factors, v)) for v in self.vectors))

    def to_json(self) -> list:
        return [[format_scalar(x) for x in v] for v in self.vectors]


@dataclass(frozen=True)
class Submodule:
    """A Z-submodule of Z^m given by integer generators (rows)."""
    basis: LatticeBasis

    def __post_init__(self):
        for v in self.basis.vectors:
            for x in v:
                if not isinstance(x, Fraction) or x.denominator != 1:
                    raise InputError(f"submodule generators must be integers, got {format_scalar(x)}")

    @classmethod
    def from_rows(cls, rows) -> "Submodule":
        return cls(LatticeBasis(tuple(tuple(row) for row in rows)))

    @property
    def rows(self) -> tuple[tuple[int, ...], ...]:
        return tuple(tuple(int(x) for x in v) for v in self.basis.vectors)

    @property
    def rank(self) -> int:
        return self.basis.rank

    @property
    def dim(self) -> int:
        return self.basis.dim

    @property
    def primitive(self) -> bool:
        return is_primitive(self)

    def to_json(self) -> list:
        return [list(row) for row in self.rows]


class LatticePoint(NamedTuple):
    vector: tuple
    coefficients: tuple[int, ...]


class ShortestVector(NamedTuple):
    vector: tuple
    norm: Scalar
    coefficients: tuple[int, ...]


def lll_transform(vectors, prec: int) -> list[list[int]]:
    """Unimodular T such that T*B is LLL-reduced for an integer approximation of B."""
    approx = [[to_mpf(x, prec) for x in v] for v in vectors]
    smallest = min(mpmath.mag(a) for row in approx for a in row if a != 0)
    shift = max(0, 64 - smallest)
    scaled = [[round(mpf_to_fraction(mpmath.ldexp(a, shift))) for a in row] for row in approx]
    r, m = len(scaled), len(scaled[0])
    try:
        _, transform = DomainMatrix([[ZZ(v) for v in row] for row in scaled], (r, m), ZZ).lll_transform()
    except DMError as exc:
        logger.debug("LLL skipped (%s); enumerating on the input basis", exc)
        return [[int(i == t) for t in range(r)] for i in range(r)]
    return [[int(v) for v in row] for row in transform.to_Matrix().tolist()]


def reduce_basis(basis: LatticeBasis, config: Config | None = None) -> tuple[LatticeBasis, list[list[int]]]:
    """LLL-reduced basis of the same lattice, computed exactly from the unimodular transform."""
    config = config or Config()
    transform = lll_transform(basis.vectors, config.precision_bits)
    reduced = tuple(_combine(basis.vectors, row) for row in transform)
    return LatticeBasis(reduced), transform


def _coefficient_bounds(vectors, radius, prec: int) -> list[int]:
    """|a_i| <= radius * ||d_i||_1 for the dual rows d_i, with a small relative slack."""
    approx = [[to_mpf(x, prec) for x in v] for v in vectors]
    mags = [mpmath.mag(a) for row in approx for a in row if a != 0]
    ctx = MPContext()
    ctx.prec = prec + 2 * (max(mags) - min(mags)) + 64
    B = ctx.matrix([[to_mpf(x, ctx.prec) for x in v] for v in vectors])
    try:
        dual = ctx.inverse(B * B.T) * B
    except ZeroDivisionError as exc:
        raise NumericDomainError("Gram matrix is numerically singular") from exc
    R = to_mpf(radius, ctx.prec)
    bounds = []
    for i in range(B.rows):
        l1 = ctx.fsum(abs(dual[i, t]) for t in range(B.cols))
        bounds.append(int(ctx.floor(R * l1 * (1 + ctx.ldexp(1, -_BOUND_SLACK_BITS)))))
    return bounds


def _float_rows(vectors):
    rows = []
    for v in vectors:
        row = [float(to_mpf(x, 64)) for x in v]
        if not all(math.isfinite(x) for x in row):
            return None
        rows.append(row)
    return rows


def _enumerate(reduced: LatticeBasis, transform, radius, budget: int, prec: int, box_scale: int = 1):
    bounds = [b * box_scale for b in _coefficient_bounds(reduced.vectors, radius, prec)]
    size = math.prod(2 * b + 1 for b in bounds)
    if size > budget:
        raise BoxOverflow(f"coefficient box of {size} points exceeds the budget of {budget}")
    logger.debug("enumerating %s coefficient vectors (bounds %s)", size, bounds)

    floats = _float_rows(reduced.vectors)
    radius_f = float(to_mpf(radius, 64))
    peak = max((abs(x) for row in floats for x in row), default=0.0) if floats else 0.0
    dim, rank = reduced.dim, reduced.rank

    points = []
    for coeffs in product(*(range(-b, b + 1) for b in bounds)):
        lead = next((a for a in coeffs if a), 0)
        if lead <= 0:
            continue
        if floats is not None:
            approx = max(abs(sum(a * floats[i][t] for i, a in enumerate(coeffs) if a)) for t in range(dim))
            slack = 2.0 ** -40 * (sum(abs(a) for a in coeffs) * peak + radius_f)
            if approx > radius_f + slack:
                continue
        vector = _combine(reduced.vectors, coeffs)
        if scalar_cmp(vector_sup(vector), radius) > 0:
            continue
        original = tuple(sum(a * transform[i][t] for i, a in enumerate(coeffs)) for t in range(rank))
        if _leading_sign(vector) < 0:
            vector, original = tuple(-x for x in vector), tuple(-a for a in original)
        points.append(LatticePoint(vector, original))
    return points


def lattice_points_in_box(basis: LatticeBasis, radius, config: Config | None = None,
                          box_scale: int = 1) -> list[LatticePoint]:
    """All nonzero lattice points with sup norm <= radius, one per +/- pair (leading entry positive)."""
    config = config or Config()
    radius = as_scalar(radius)
    if scalar_sign(radius) <= 0:
        return []
    reduced, transform = reduce_basis(basis, config)
    return _enumerate(reduced, transform, radius, config.box_budget, config.precision_bits, box_scale)


def compare_candidates(u, v) -> int:
    """Order nonzero vectors: sup norm, then squared Euclidean norm, then lexicographically larger first."""
    for a, b in ((vector_sup(u), vector_sup(v)), (sum(x * x for x in u), sum(x * x for x in v))):
        order = scalar_cmp(a, b)
        if order:
            return int(order)
    for a, b in zip(u, v):
        order = scalar_cmp(a, b)
        if order:
            return -int(order)
    return 0


def shortest_vector(basis: LatticeBasis, config: Config | None = None, box_scale: int = 1) -> ShortestVector:
    """
    A nonzero lattice vector of minimal sup norm, by exhaustive enumeration.

    Among vectors of equal sup norm the one with the smaller Euclidean norm
    wins, then the lexicographically larger sign-normalized vector. This
    gives (1, 0) for Z^2 and (0, 1/2) for g_2 u_{1/2} Z^2.
    """
    config = config or Config()
    if basis.dim > config.svp_dim_cap:
        raise DimensionTooLarge(f"dimension {basis.dim} exceeds the SVP cap of {config.svp_dim_cap}")
    reduced, transform = reduce_basis(basis, config)
    radius = min(vector_sup(v) for v in reduced.vectors)
    points = _enumerate(reduced, transform, radius, config.box_budget, config.precision_bits, box_scale)
    preference = cmp_to_key(compare_candidates)
    best = min(points, key=lambda p: preference(p.vector))
    return ShortestVector(best.vector, vector_sup(best.vector), best.coefficients)


def covolume(d: "Submodule | LatticeBasis") -> Scalar:
    basis = d.basis if isinstance(d, Submodule) else d
    return sup_norm(wedge_all(basis.vectors))


def apply_matrix(g: LatticeBasis, d: Submodule) -> LatticeBasis:
    """The generators of g*Delta, where g acts through its basis vectors as columns."""
    if g.rank != d.dim:
        raise InputError(f"g has {g.rank} columns but the submodule lives in Z^{d.dim}")
    return LatticeBasis(tuple(g.apply(row) for row in d.rows))


def smith_invariants(d: Submodule) -> tuple[int, ...]:
    diagonal, _, _ = smith_normal_decomp(Matrix(d.rows), domain=ZZ)
    return tuple(abs(int(diagonal[i, i])) for i in range(min(diagonal.shape)))


def is_primitive(d: Submodule) -> bool:
    """True iff every Smith elementary divisor of the generator matrix is 1."""
    return all(f == 1 for f in smith_invariants(d)[:d.rank])


def _is_primitive_rows(rows) -> bool:
    matrix = Matrix(rows)
    if matrix.rank() < len(rows):
        return False
    diagonal, _, _ = smith_normal_decomp(matrix, domain=ZZ)
    return all(abs(int(diagonal[i, i])) == 1 for i in range(len(rows)))


def canonical_hnf(rows) -> tuple[tuple[int, ...], ...]:
    """
    Canonical generators of the lattice spanned by ``rows``: the column-style
    Hermite normal form, pivots read from the bottom coordinate upwards.
    """
    columns = Matrix(rows).T
    m, r = columns.shape
    pivots, selected = [], Matrix.zeros(0, r)
    for i in reversed(range(m)):
        candidate = selected.col_join(columns.row(i))
        if candidate.rank() > selected.rank():
            pivots.append(i)
            selected = candidate
        if len(pivots) == r:
            break
    if len(pivots) < r:
        raise InputError("generators are linearly dependent")
    order = [i for i in range(m) if i not in pivots] + sorted(pivots)
    hnf = hermite_normal_form(columns.extract(order, list(range(r))))
    restored = [None] * m
    for position, original in enumerate(order):
        restored[original] = [int(hnf[position, t]) for t in range(hnf.shape[1])]
    return tuple(tuple(restored[i][t] for i in range(m)) for t in range(hnf.shape[1]))


def saturate(d: Submodule) -> Submodule:
    """The primitive submodule R*Delta cap Z^m, in canonical form."""
    _, _, right = smith_normal_decomp(Matrix(d.rows), domain=ZZ)
    inverse = right.inv()
    rows = [[int(inverse[i, t]) for t in range(d.dim)] for i in range(d.rank)]
    return Submodule.from_rows(canonical_hnf(rows))


def _normalized_vectors(m: int, bound: int):
    for v in product(range(-bound, bound + 1), repeat=m):
        if next((x for x in v if x), 0) > 0:
            yield v


def enumerate_primitive(m: int, r: int, coeff_bound: int, config: Config | None = None) -> Iterator[Submodule]:
    """
    Every primitive rank-r submodule of Z^m whose canonical HNF has entries in
    [-coeff_bound, coeff_bound], each exactly once. A truncation of the set of
    all primitive submodules, not the whole set.
    """
    config = config or Config()
    if not 1 <= r <= m or m > 6:
        raise InputError(f"need 1 <= r <= m <= 6, got m={m}, r={r}")
    if coeff_bound < 1:
        raise InputError("coeff_bound must be at least 1")
    if r == m:
        yield Submodule(LatticeBasis.standard(m))
        return
    vectors = list(_normalized_vectors(m, coeff_bound))
    count = math.comb(len(vectors), r)
    if count > config.box_budget:
        raise BoxOverflow(f"{count} generator sets exceed the budget of {config.box_budget}")
    seen = set()
    for combo in combinations(vectors, r):
        if not _is_primitive_rows(combo):
            continue
        key = canonical_hnf(combo)
        if key in seen or max(abs(x) for row in key for x in row) > coeff_bound:
            continue
        seen.add(key)
        yield Submodule.from_rows(key)


def minkowski_check(g: LatticeBasis, d: Submodule, config: Config | None = None) -> bool:
    """delta(g Z^m) <= 2 * cov(g Delta)^(1/rank), decided exactly as delta^r <= 2^r * cov."""
    if g.rank != g.dim:
        raise InputError("g must be a full-rank basis")
    cov = covolume(apply_matrix(g, d))
    delta = shortest_vector(g, config).norm
    return scalar_cmp(delta ** d.rank, Fraction(2) ** d.rank * cov) <= 0
