"""
Plücker-coordinate exterior algebra over Z^{n+1} / Q^{n+1}.

Basis multivectors e_I are indexed by ascending tuples I of indices in
[0, n]; grade 0 uses the empty tuple. Coefficients are scalars from
``singularlab.numeric`` and zero coefficients are never stored.
"""
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations

from singularlab.exceptions import GradeOverflow, InputError
from singularlab.numeric import Scalar, as_scalar, format_scalar, is_zero, parse_scalar, pow_base, scalar_max


def _merge_sign(left: tuple, right: tuple) -> int:
    """Sign of the shuffle putting ``left + right`` into ascending order."""
    inversions = sum(1 for i in left for j in right if i > j)
    return -1 if inversions % 2 else 1


def insertion_sign(i: int, J: tuple) -> int:
    """(-1)^{#{j in J : j < i}}, so that e_i ^ e_J = insertion_sign(i, J) * e_{sorted(J + i)}."""
    return -1 if sum(1 for j in J if j < i) % 2 else 1


class MultiVector:
    __slots__ = ("dim", "grade", "coeffs")

    def __init__(self, dim: int, grade: int, coeffs: dict | None = None):
        if dim < 1 or grade < 0 or grade > dim:
            raise GradeOverflow(f"grade {grade} is not available in dimension {dim}")
        clean = {}
        for key, value in (coeffs or {}).items():
            key = tuple(key)
            if len(key) != grade or list(key) != sorted(set(key)) or (key and (key[0] < 0 or key[-1] >= dim)):
                raise InputError(f"index set {key} is not an ascending {grade}-subset of [0, {dim - 1}]")
            value = as_scalar(value)
            if not is_zero(value):
                clean[key] = value
        object.__setattr__(self, "dim", dim)
        object.__setattr__(self, "grade", grade)
        object.__setattr__(self, "coeffs", clean)

    def __setattr__(self, name, value):
        raise AttributeError("MultiVector is immutable")

    @classmethod
    def _from_trusted(cls, dim: int, grade: int, coeffs: dict) -> "MultiVector":
        mv = object.__new__(cls)
        object.__setattr__(mv, "dim", dim)
        object.__setattr__(mv, "grade", grade)
        object.__setattr__(mv, "coeffs", {k: v for k, v in coeffs.items() if not is_zero(v)})
        return mv

    @classmethod
    def zero(cls, dim: int, grade: int) -> "MultiVector":
        return cls(dim, grade)

    @classmethod
    def basis(cls, dim: int, indices, coefficient=1) -> "MultiVector":
        indices = tuple(indices)
        return cls(dim, len(indices), {indices: coefficient})

    @classmethod
    def scalar(cls, dim: int, value) -> "MultiVector":
        return cls(dim, 0, {(): value})

    @classmethod
    def from_vector(cls, vector) -> "MultiVector":
        return cls(len(vector), 1, {(i,): v for i, v in enumerate(vector)})

    def is_zero(self) -> bool:
        return not self.coeffs

    def coefficient(self, indices) -> Scalar:
        return self.coeffs.get(tuple(indices), Fraction(0))

    def _check_compatible(self, other: "MultiVector"):
        if self.dim != other.dim or self.grade != other.grade:
            raise InputError(
                f"cannot combine grade {self.grade} in dim {self.dim} with grade {other.grade} in dim {other.dim}"
            )

    def __add__(self, other: "MultiVector") -> "MultiVector":
        if not isinstance(other, MultiVector):
            return NotImplemented
        self._check_compatible(other)
        coeffs = dict(self.coeffs)
        for key, value in other.coeffs.items():
            coeffs[key] = coeffs[key] + value if key in coeffs else value
        return MultiVector._from_trusted(self.dim, self.grade, coeffs)

    def __neg__(self) -> "MultiVector":
        return MultiVector._from_trusted(self.dim, self.grade, {k: -v for k, v in self.coeffs.items()})

    def __sub__(self, other: "MultiVector") -> "MultiVector":
        if not isinstance(other, MultiVector):
            return NotImplemented
        return self + (-other)

    def scale(self, factor) -> "MultiVector":
        factor = as_scalar(factor)
        return MultiVector._from_trusted(self.dim, self.grade, {k: v * factor for k, v in self.coeffs.items()})

    def __mul__(self, factor):
        if isinstance(factor, MultiVector):
            return NotImplemented
        return self.scale(factor)

    __rmul__ = __mul__

    def __eq__(self, other):
        if not isinstance(other, MultiVector):
            return NotImplemented
        return self.dim == other.dim and self.grade == other.grade and self.coeffs == other.coeffs

    def __hash__(self):
        return hash((self.dim, self.grade, frozenset((k, format_scalar(v)) for k, v in self.coeffs.items())))

    def sort_key(self) -> tuple:
        """Lexicographic key over all index sets of this grade; integer coefficients only."""
        return tuple(self.coefficient(I) for I in combinations(range(self.dim), self.grade))

    def to_json(self) -> dict:
        return {
            "dim": self.dim,
            "grade": self.grade,
            "coeffs": {",".join(map(str, k)): format_scalar(v) for k, v in sorted(self.coeffs.items())},
        }

    @classmethod
    def from_json(cls, payload: dict) -> "MultiVector":
        try:
            coeffs = {
                tuple(int(i) for i in key.split(",") if i != ""): parse_scalar(value)
                for key, value in payload["coeffs"].items()
            }
            return cls(int(payload["dim"]), int(payload["grade"]), coeffs)
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"malformed multivector payload: {exc}") from exc

    def __repr__(self):
        terms = " + ".join(f"{format_scalar(v)}*e{''.join(map(str, k))}" for k, v in sorted(self.coeffs.items()))
        return f"MultiVector(dim={self.dim}, grade={self.grade}, {terms or '0'})"


@dataclass(frozen=True)
class CDecomposition:
    """The parts c(w)_0..c(w)_n, each of grade j-1 supported on index sets inside {1..n}."""
    parts: tuple

    @property
    def n(self) -> int:
        return len(self.parts) - 1


def wedge(u: MultiVector, v: MultiVector) -> MultiVector:
    if u.dim != v.dim:
        raise InputError(f"ambient dimensions differ: {u.dim} vs {v.dim}")
    grade = u.grade + v.grade
    if grade > u.dim:
        raise GradeOverflow(f"grade {u.grade} ^ grade {v.grade} exceeds ambient dimension {u.dim}")
    coeffs = {}
    for I, a in u.coeffs.items():
        for J, b in v.coeffs.items():
            if set(I) & set(J):
                continue
            key = tuple(sorted(I + J))
            term = a * b if _merge_sign(I, J) > 0 else -(a * b)
            coeffs[key] = coeffs[key] + term if key in coeffs else term
    return MultiVector._from_trusted(u.dim, grade, coeffs)


def wedge_all(vectors) -> MultiVector:
    """w_1 ^ ... ^ w_r of grade-1 vectors given as coordinate sequences."""
    vectors = [MultiVector.from_vector(v) if not isinstance(v, MultiVector) else v for v in vectors]
    if not vectors:
        raise InputError("wedge of an empty family")
    result = vectors[0]
    for v in vectors[1:]:
        result = wedge(result, v)
    return result


def sup_norm(w: MultiVector) -> Scalar:
    return scalar_max(abs(v) for v in w.coeffs.values())


def project_pi(w: MultiVector) -> MultiVector:
    """Orthogonal projection onto the exterior power of span(e_1..e_n)."""
    return MultiVector._from_trusted(w.dim, w.grade, {k: v for k, v in w.coeffs.items() if 0 not in k})


def project_pi_bullet(w: MultiVector, split_s: int) -> MultiVector:
    """Keep the coefficients whose index sets lie in {split_s+1..n}."""
    n = w.dim - 1
    if w.grade > n - split_s:
        raise GradeOverflow(f"grade {w.grade} exceeds n - s = {n - split_s}")
    return MultiVector._from_trusted(w.dim, w.grade, {k: v for k, v in w.coeffs.items() if k[0] > split_s})


def c_decompose(w: MultiVector) -> CDecomposition:
    if w.grade < 1:
        raise InputError("c(w) needs grade >= 1")
    buckets = [{} for _ in range(w.dim)]
    for I, value in w.coeffs.items():
        for i in I:
            J = tuple(t for t in I if t != i)
            if 0 in J:
                continue
            term = value if insertion_sign(i, J) > 0 else -value
            bucket = buckets[i]
            bucket[J] = bucket[J] + term if J in bucket else term
    return CDecomposition(tuple(MultiVector._from_trusted(w.dim, w.grade - 1, b) for b in buckets))


def contract(xtilde, c: CDecomposition) -> MultiVector:
    """x~ . c(w) = sum_i x~_i c(w)_i for x~ = (1, x)."""
    xtilde = [as_scalar(t) for t in xtilde]
    if len(xtilde) != len(c.parts):
        raise InputError(f"x~ has length {len(xtilde)}, expected {len(c.parts)}")
    if xtilde[0] != 1:
        raise InputError("x~ must start with 1")
    result = c.parts[0]
    for weight, part in zip(xtilde[1:], c.parts[1:]):
        if not part.is_zero() and not is_zero(weight):
            result = result + part.scale(weight)
    return result


def flow_action(w: MultiVector, x, k: int, base=2) -> MultiVector:
    """
    g_k u_x applied to w in closed form:
    b^{(n-j+1)k} e_0 ^ (x~ . c(w)) + b^{-jk} pi(w).
    """
    n, j = w.dim - 1, w.grade
    if len(x) != n:
        raise InputError(f"x has length {len(x)}, expected {n}")
    if j < 1:
        raise InputError("flow action is defined for grade >= 1")
    b = as_scalar(base)
    e0 = MultiVector.basis(w.dim, (0,))
    lifted = wedge(e0, contract([1, *x], c_decompose(w)))
    return lifted.scale(pow_base(b, (n - j + 1) * k)) + project_pi(w).scale(pow_base(b, -j * k))


def flow_matrix(n: int, k: int, base=2, x=None) -> list[list[Scalar]]:
    """The explicit (n+1)x(n+1) matrix g_k u_x with g_k = diag(b^{nk}, b^{-k}, ..., b^{-k})."""
    x = [as_scalar(t) for t in (x if x is not None else [0] * n)]
    top, rest = pow_base(base, n * k), pow_base(base, -k)
    matrix = [[top] + [top * t for t in x]]
    for i in range(1, n + 1):
        matrix.append([Fraction(0)] * i + [rest] + [Fraction(0)] * (n - i))
    return matrix


def matrix_action(matrix, w: MultiVector) -> MultiVector:
    """Functorial action of an explicit matrix: e_I -> wedge of the columns indexed by I."""
    size = len(matrix)
    if size != w.dim or any(len(row) != size for row in matrix):
        raise InputError(f"matrix must be {w.dim}x{w.dim}")
    columns = [MultiVector.from_vector([row[i] for row in matrix]) for i in range(size)]
    result = MultiVector.zero(size, w.grade)
    for I, value in w.coeffs.items():
        image = MultiVector.scalar(size, 1)
        for i in I:
            image = wedge(image, columns[i])
        result = result + image.scale(value)
    return result
