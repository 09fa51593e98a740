"""
Exact and controlled-precision scalar arithmetic.

Every coordinate, matrix entry and threshold in singularlab is one of three
scalar backends:

* ``fractions.Fraction`` - exact rationals (ints are promoted on entry);
* ``QuadIrr`` - a + b*sqrt(d) with rational a, b and square-free d, closed
  under field operations with exact sign decisions;
* ``HPFloat`` - an mpmath value carrying a propagated absolute error bound.

Mixing two different quadratic fields, or anything with an ``HPFloat``,
falls back to ``HPFloat``. A comparison whose answer is not certified by the
error bound raises ``UndecidableComparison`` instead of guessing.
"""
import logging
import math
import operator
from enum import IntEnum
from fractions import Fraction
from functools import lru_cache, reduce

import mpmath
from mpmath.libmp import to_rational
from sympy import Pow, S, SympifyError, expand, factorint, integer_nthroot, radsimp, sympify

from singularlab.exceptions import InputError, NumericDomainError, UndecidableComparison

logger = logging.getLogger(__name__)

DEFAULT_PRECISION = 192

# precision multipliers tried when two exact values live in different quadratic fields
_ESCALATION = (1, 4, 16)


class Ordering(IntEnum):
    LESS = -1
    EQUAL = 0
    GREATER = 1


@lru_cache(maxsize=4096)
def _square_free(d: int) -> tuple[int, int]:
    """Split d into (outside, inside) with d == outside**2 * inside, inside square-free."""
    outside, inside = 1, 1
    for prime, exp in factorint(d).items():
        outside *= prime ** (exp // 2)
        if exp % 2:
            inside *= prime
    return outside, inside


def _frac(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


def mpf_to_fraction(x) -> Fraction:
    p, q = to_rational(x._mpf_)
    return Fraction(int(p), int(q))


def _abs(x):
    """Exact |x|; the builtin abs rounds to the global mpmath precision."""
    return mpmath.fneg(x, exact=True) if x < 0 else x


def _ulp(value, prec: int):
    """Upper bound for the rounding error of a round-to-nearest result at ``prec`` bits."""
    return mpmath.fmul(_abs(value), mpmath.ldexp(1, 1 - prec), rounding="u")


def _up_sum(*terms):
    return reduce(lambda x, y: mpmath.fadd(x, y, rounding="u"), terms, mpmath.mpf(0))


def _up_mul(x, y):
    return mpmath.fmul(x, y, rounding="u")


def _int_pow(base, k: int):
    if not isinstance(k, int):
        raise NumericDomainError(f"only integer exponents are supported, got {k!r}")
    if k < 0:
        return _int_pow(Fraction(1) / base, -k)
    result, square = Fraction(1), base
    while k:
        if k & 1:
            result = result * square
        k >>= 1
        if k:
            square = square * square
    return result


def quad(a, b, d: int):
    """Normalizing constructor: returns a Fraction when a + b*sqrt(d) is rational."""
    a, b = _frac(a), _frac(b)
    if b == 0:
        return a
    outside, inside = _square_free(int(d))
    if inside == 1:
        return a + b * outside
    return QuadIrr(a, b * outside, inside)


class QuadIrr:
    """The real number a + b*sqrt(d), b != 0, d > 1 square-free."""

    __slots__ = ("a", "b", "d")

    def __init__(self, a, b, d: int):
        a, b, d = _frac(a), _frac(b), int(d)
        if d < 2:
            raise NumericDomainError(f"sqrt({d}) does not define a quadratic irrationality")
        outside, inside = _square_free(d)
        if b == 0 or inside == 1:
            raise NumericDomainError(f"{a}+{b}*sqrt({d}) is rational; build it with quad()")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b * outside)
        object.__setattr__(self, "d", inside)

    def __setattr__(self, name, value):
        raise AttributeError("QuadIrr is immutable")

    def _same_field(self, other):
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            return Fraction(other), Fraction(0)
        if isinstance(other, QuadIrr) and other.d == self.d:
            return other.a, other.b
        return None

    def conjugate(self) -> "QuadIrr":
        return QuadIrr(self.a, -self.b, self.d)

    def norm(self) -> Fraction:
        return self.a * self.a - self.b * self.b * self.d

    def sign(self) -> int:
        sign_a = (self.a > 0) - (self.a < 0)
        sign_b = 1 if self.b > 0 else -1
        if sign_a == 0 or sign_a == sign_b:
            return sign_b
        # opposite signs: the larger of a^2 and b^2*d wins; they never tie
        return sign_a if self.norm() > 0 else sign_b

    def inverse(self):
        n = self.norm()
        return quad(self.a / n, -self.b / n, self.d)

    def __add__(self, other):
        pair = self._same_field(other)
        if pair is None:
            return _mixed(operator.add, self, other)
        return quad(self.a + pair[0], self.b + pair[1], self.d)

    __radd__ = __add__

    def __neg__(self):
        return QuadIrr(-self.a, -self.b, self.d)

    def __pos__(self):
        return self

    def __sub__(self, other):
        pair = self._same_field(other)
        if pair is None:
            return _mixed(operator.sub, self, other)
        return quad(self.a - pair[0], self.b - pair[1], self.d)

    def __rsub__(self, other):
        return (-self).__add__(other)

    def __mul__(self, other):
        pair = self._same_field(other)
        if pair is None:
            return _mixed(operator.mul, self, other)
        a, b = pair
        return quad(self.a * a + self.b * b * self.d, self.a * b + self.b * a, self.d)

    __rmul__ = __mul__

    def __truediv__(self, other):
        pair = self._same_field(other)
        if pair is None:
            return _mixed(operator.truediv, self, other)
        divisor = quad(pair[0], pair[1], self.d)
        if isinstance(divisor, Fraction):
            if divisor == 0:
                raise ZeroDivisionError("QuadIrr division by zero")
            return quad(self.a / divisor, self.b / divisor, self.d)
        return self * divisor.inverse()

    def __rtruediv__(self, other):
        if self._same_field(other) is None:
            return NotImplemented
        return self.inverse() * other

    def __pow__(self, k):
        return _int_pow(self, k)

    def __abs__(self):
        return self if self.sign() > 0 else -self

    def __floor__(self) -> int:
        square = self.b * self.b * self.d
        # |b|*sqrt(d) lies in [root, root + 1) / denominator
        root = math.isqrt(square.numerator * square.denominator)
        approx = self.a + (Fraction(root, square.denominator) if self.b > 0
                           else -Fraction(root, square.denominator))
        guess = math.floor(approx)
        while (self - guess).sign() < 0:
            guess -= 1
        while (self - (guess + 1)).sign() >= 0:
            guess += 1
        return guess

    def __ceil__(self) -> int:
        return -math.floor(-self)

    def __eq__(self, other):
        if isinstance(other, QuadIrr):
            return self.d == other.d and self.a == other.a and self.b == other.b
        if isinstance(other, (int, Fraction)):
            return False
        if isinstance(other, HPFloat):
            return scalar_cmp(self, other) == Ordering.EQUAL
        return NotImplemented

    def __hash__(self):
        return hash(("quad", self.a, self.b, self.d))

    def __lt__(self, other):
        return _rich(self, other, operator.lt)

    def __le__(self, other):
        return _rich(self, other, operator.le)

    def __gt__(self, other):
        return _rich(self, other, operator.gt)

    def __ge__(self, other):
        return _rich(self, other, operator.ge)

    def __str__(self):
        return format_scalar(self)

    def __repr__(self):
        return f"QuadIrr({self.a!s}, {self.b!s}, {self.d})"


class HPFloat:
    """
    High-precision float with a sound absolute error bound.

    The true value always lies in ``[value - err, value + err]``. Arithmetic
    propagates the bound (rounding errors included); sign, floor and ordering
    raise ``UndecidableComparison`` when the interval does not decide them.
    """

    __slots__ = ("value", "err", "prec")

    def __init__(self, value, err=0, prec: int = DEFAULT_PRECISION):
        if not isinstance(value, mpmath.mpf):
            value = mpmath.mpf(value, prec=prec)
        if not isinstance(err, mpmath.mpf):
            err = mpmath.mpf(err, rounding="u")
        object.__setattr__(self, "value", value)
        object.__setattr__(self, "err", _abs(err))
        object.__setattr__(self, "prec", int(prec))

    def __setattr__(self, name, value):
        raise AttributeError("HPFloat is immutable")

    @classmethod
    def of(cls, x, prec: int = DEFAULT_PRECISION) -> "HPFloat":
        """Enclose any scalar at ``prec`` bits."""
        if isinstance(x, HPFloat):
            return x if x.prec >= prec else cls(x.value, x.err, prec)
        if isinstance(x, QuadIrr):
            shift = prec + 16
            square = x.b * x.b * x.d
            denominator = square.denominator << shift
            root = math.isqrt((square.numerator * square.denominator) << (2 * shift))
            # |b|*sqrt(d) lies within half a unit of (root + 1/2) / denominator
            midpoint = Fraction(2 * root + 1, 2 * denominator)
            enclosed = cls.of(x.a + (midpoint if x.b > 0 else -midpoint), prec)
            radius = mpmath.fdiv(1, 2 * denominator, rounding="u")
            return cls(enclosed.value, _up_sum(enclosed.err, radius), prec)
        q = _frac(x)
        value = mpmath.fdiv(q.numerator, q.denominator, prec=prec)
        err = mpmath.mpf(0) if mpf_to_fraction(value) == q else _ulp(value, prec)
        return cls(value, err, prec)

    def _coerce(self, other):
        if isinstance(other, HPFloat):
            return other
        if isinstance(other, (int, Fraction, QuadIrr)) and not isinstance(other, bool):
            return HPFloat.of(other, self.prec)
        return None

    def __add__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        prec = max(self.prec, other.prec)
        value = mpmath.fadd(self.value, other.value, prec=prec)
        return HPFloat(value, _up_sum(self.err, other.err, _ulp(value, prec)), prec)

    __radd__ = __add__

    def __neg__(self):
        return HPFloat(mpmath.fneg(self.value, exact=True), self.err, self.prec)

    def __pos__(self):
        return self

    def __sub__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self).__add__(other)

    def __mul__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        prec = max(self.prec, other.prec)
        value = mpmath.fmul(self.value, other.value, prec=prec)
        err = _up_sum(
            _up_mul(_abs(self.value), other.err),
            _up_mul(_abs(other.value), self.err),
            _up_mul(self.err, other.err),
            _ulp(value, prec),
        )
        return HPFloat(value, err, prec)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        prec = max(self.prec, other.prec)
        low = mpmath.fsub(_abs(other.value), other.err, rounding="d")
        if low <= 0:
            raise UndecidableComparison("divisor enclosure contains zero")
        value = mpmath.fdiv(self.value, other.value, prec=prec)
        spread = _up_sum(_up_mul(_abs(self.value), other.err), _up_mul(_abs(other.value), self.err))
        scale = mpmath.fmul(_abs(other.value), low, rounding="d")
        err = _up_sum(mpmath.fdiv(spread, scale, rounding="u"), _ulp(value, prec))
        return HPFloat(value, err, prec)

    def __rtruediv__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return other / self

    def __pow__(self, k):
        return _int_pow(self, k)

    def __abs__(self):
        return HPFloat(_abs(self.value), self.err, self.prec)

    def bounds(self) -> tuple[Fraction, Fraction]:
        """Exact rational enclosure ``(lo, hi)`` of the true value."""
        lo = mpmath.fsub(self.value, self.err, prec=self.prec + 8, rounding="d")
        hi = mpmath.fadd(self.value, self.err, prec=self.prec + 8, rounding="u")
        return mpf_to_fraction(lo), mpf_to_fraction(hi)

    def contains(self, q) -> bool:
        lo, hi = self.bounds()
        return lo <= _frac(q) <= hi

    def sign(self) -> int:
        if _abs(self.value) > self.err:
            return 1 if self.value > 0 else -1
        if self.value == 0 and self.err == 0:
            return 0
        raise UndecidableComparison(f"sign of {format_scalar(self)} is not decided by its error bound")

    def __floor__(self) -> int:
        lo, hi = self.bounds()
        if math.floor(lo) != math.floor(hi):
            raise UndecidableComparison(f"floor of {format_scalar(self)} is not decided by its error bound")
        return math.floor(lo)

    def __ceil__(self) -> int:
        return -math.floor(-self)

    def __eq__(self, other):
        if self._coerce(other) is None:
            return NotImplemented
        return scalar_cmp(self, other) == Ordering.EQUAL

    __hash__ = None

    def __lt__(self, other):
        return _rich(self, other, operator.lt)

    def __le__(self, other):
        return _rich(self, other, operator.le)

    def __gt__(self, other):
        return _rich(self, other, operator.gt)

    def __ge__(self, other):
        return _rich(self, other, operator.ge)

    def __str__(self):
        return format_scalar(self)

    def __repr__(self):
        return f"HPFloat({format_scalar(self)!r}, prec={self.prec})"


Scalar = Fraction | QuadIrr | HPFloat


def _mixed(op, x, y):
    if not isinstance(y, (QuadIrr, HPFloat)):
        return NotImplemented
    prec = y.prec if isinstance(y, HPFloat) else DEFAULT_PRECISION
    return op(HPFloat.of(x, prec), HPFloat.of(y, prec))


def _rich(x, y, op):
    if not is_scalar(y):
        return NotImplemented
    return op(int(scalar_cmp(x, y)), 0)


def is_scalar(x) -> bool:
    return isinstance(x, (int, Fraction, QuadIrr, HPFloat)) and not isinstance(x, bool)


def as_scalar(x, prec: int = DEFAULT_PRECISION) -> Scalar:
    """Promote ints to Fraction and parse strings; scalars pass through."""
    if isinstance(x, (Fraction, QuadIrr, HPFloat)):
        return x
    if isinstance(x, int) and not isinstance(x, bool):
        return Fraction(x)
    if isinstance(x, str):
        return parse_scalar(x, prec)
    raise InputError(f"unsupported scalar {x!r}; floats must be given as strings")


def scalar_sign(x) -> int:
    x = as_scalar(x)
    if isinstance(x, Fraction):
        return (x > 0) - (x < 0)
    return x.sign()


def _cmp_across_fields(a: QuadIrr, b: QuadIrr) -> Ordering:
    # 1, sqrt(d1), sqrt(d2) are independent over Q, so the values differ and enough bits decide
    for factor in _ESCALATION:
        prec = DEFAULT_PRECISION * factor
        try:
            return Ordering((HPFloat.of(a, prec) - HPFloat.of(b, prec)).sign())
        except UndecidableComparison:
            logger.debug("escalating precision past %s bits for %r vs %r", prec, a, b)
    raise UndecidableComparison(f"could not order {a!r} and {b!r}")


def scalar_cmp(a, b) -> Ordering:
    """Exact ordering of two scalars; HPFloat operands may raise UndecidableComparison."""
    a, b = as_scalar(a), as_scalar(b)
    if isinstance(a, QuadIrr) and isinstance(b, QuadIrr) and a.d != b.d:
        return _cmp_across_fields(a, b)
    return Ordering(scalar_sign(a - b))


def is_zero(x) -> bool:
    """True only for an exact zero (an HPFloat needs both value and error equal to 0)."""
    x = as_scalar(x)
    if isinstance(x, Fraction):
        return x == 0
    if isinstance(x, QuadIrr):
        return False
    return x.value == 0 and x.err == 0


def scalar_floor(x) -> int:
    return math.floor(as_scalar(x))


def nearest_integer(x) -> int:
    """Nearest integer, halves rounded up."""
    return math.floor(as_scalar(x) + Fraction(1, 2))


def scalar_max(values, default=Fraction(0)) -> Scalar:
    return max(values, default=default)


def to_mpf(x, prec: int = DEFAULT_PRECISION):
    """Approximation for pre-filters and reports; never used to decide a verdict."""
    x = as_scalar(x)
    if isinstance(x, HPFloat):
        return x.value
    return HPFloat.of(x, prec).value


def pow_base(b, k: int) -> Scalar:
    b = as_scalar(b)
    if scalar_cmp(b, 1) <= 0:
        raise InputError(f"flow base must exceed 1, got {format_scalar(b)}")
    return b ** k


def power_floor(Q: int, omega: Fraction) -> int:
    """floor(Q ** omega) for integer Q >= 1 and rational omega >= 0."""
    omega = _frac(omega)
    root, _ = integer_nthroot(Q ** omega.numerator, omega.denominator)
    return int(root)


def below_power(value, t, Q: int, omega) -> bool:
    """Decide ``value < t / Q**omega`` exactly for value >= 0, t > 0 and rational omega."""
    omega = _frac(omega)
    p, r = omega.numerator, omega.denominator
    lhs = as_scalar(value) ** r * Fraction(Q) ** p
    return scalar_cmp(lhs, as_scalar(t) ** r) < 0


def _from_sympy(expr, raw: str) -> Scalar:
    expr = expand(radsimp(expr))
    if expr.is_Rational:
        return Fraction(int(expr.p), int(expr.q))
    a, b, d = Fraction(0), Fraction(0), None
    for term, coeff in expr.as_coefficients_dict().items():
        if not coeff.is_Rational:
            raise InputError(f"{raw!r} is not a rational or quadratic irrational")
        coeff = Fraction(int(coeff.p), int(coeff.q))
        if term == 1:
            a += coeff
        elif isinstance(term, Pow) and term.exp == S.Half and term.base.is_Integer and term.base > 0:
            if d is not None and d != int(term.base):
                raise InputError(f"{raw!r} mixes square roots; only degree-2 fields are supported")
            d = int(term.base)
            b += coeff
        else:
            raise InputError(f"{raw!r} is not a rational or quadratic irrational")
    return a if d is None else quad(a, b, d)


def parse_scalar(text, prec: int = DEFAULT_PRECISION) -> Scalar:
    """
    Parse the scalar grammar: ``"3/7"``, ``"0.1"`` (read exactly),
    ``"1+2*sqrt(5)"``, ``"(1+sqrt(5))/2"`` and ``"1.41421356e0±1e-30"``.
    """
    if not isinstance(text, str):
        return as_scalar(text, prec)
    raw = text.strip()
    for marker in ("±", "+/-"):
        if marker in raw:
            left, right = raw.split(marker, 1)
            try:
                value, err = Fraction(left.strip()), Fraction(right.strip())
            except ValueError as exc:
                raise InputError(f"cannot parse high-precision scalar {raw!r}") from exc
            enclosed = HPFloat.of(value, prec)
            stated = mpmath.fdiv(abs(err.numerator), err.denominator, rounding="u")
            return HPFloat(enclosed.value, _up_sum(enclosed.err, stated), prec)
    if not raw:
        raise InputError("empty scalar")
    try:
        expr = sympify(raw, rational=True)
    except (SympifyError, SyntaxError, TypeError, ValueError) as exc:
        raise InputError(f"cannot parse scalar {raw!r}") from exc
    return _from_sympy(expr, raw)


def format_scalar(x) -> str:
    x = as_scalar(x)
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, QuadIrr):
        root = f"sqrt({x.d})"
        if x.b == 1:
            tail = root
        elif x.b == -1:
            tail = f"-{root}"
        else:
            tail = f"{x.b}*{root}"
        if x.a == 0:
            return tail
        return f"{x.a}{tail}" if tail.startswith("-") else f"{x.a}+{tail}"
    digits = max(15, int(x.prec * 0.30103))
    return f"{mpmath.nstr(x.value, digits)}±{mpmath.nstr(x.err, 3)}"


def rational_approximation(x, max_denominator: int = 10 ** 12) -> Fraction:
    """Exact value for rationals, otherwise the best fraction with bounded denominator."""
    x = as_scalar(x)
    if isinstance(x, Fraction):
        return x
    return mpf_to_fraction(to_mpf(x)).limit_denominator(max_denominator)
