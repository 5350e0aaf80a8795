"""Exact arithmetic in the number field K = Q(i, sqrt3).

Elements are stored on the fixed basis {1, s3, i, s3i} as four integer
numerators over one positive common denominator, reduced after every
operation so that structural equality is mathematical equality.
"""
from __future__ import annotations

import math
from fractions import Fraction
from numbers import Rational

__all__ = [
    "FieldElem",
    "ZERO",
    "ONE",
    "I",
    "S3",
    "S3I",
    "field_add",
    "field_mul",
    "field_inv",
    "field_conj",
    "field_to_complex",
    "as_field",
]


def _reduce(n0: int, n1: int, n2: int, n3: int, den: int):
    if den < 0:
        n0, n1, n2, n3, den = -n0, -n1, -n2, -n3, -den
    g = math.gcd(math.gcd(math.gcd(n0, n1), math.gcd(n2, n3)), den)
    if g > 1:
        n0 //= g
        n1 //= g
        n2 //= g
        n3 //= g
        den //= g
    return n0, n1, n2, n3, den


class FieldElem:
    """a + b*s3 + c*i + d*s3*i with rational a, b, c, d."""

    __slots__ = ("_n", "_den", "_hash")

    def __init__(self, a=0, b=0, c=0, d=0):
        parts = [Fraction(a), Fraction(b), Fraction(c), Fraction(d)]
        den = 1
        for p in parts:
            den = den * p.denominator // math.gcd(den, p.denominator)
        nums = [p.numerator * (den // p.denominator) for p in parts]
        n0, n1, n2, n3, den = _reduce(*nums, den)
        self._n = (n0, n1, n2, n3)
        self._den = den
        self._hash = None

    @classmethod
    def _raw(cls, n0: int, n1: int, n2: int, n3: int, den: int) -> "FieldElem":
        obj = object.__new__(cls)
        n0, n1, n2, n3, den = _reduce(n0, n1, n2, n3, den)
        obj._n = (n0, n1, n2, n3)
        obj._den = den
        obj._hash = None
        return obj

    # -- coordinates -------------------------------------------------------
    @property
    def a(self) -> Fraction:
        return Fraction(self._n[0], self._den)

    @property
    def b(self) -> Fraction:
        return Fraction(self._n[1], self._den)

    @property
    def c(self) -> Fraction:
        return Fraction(self._n[2], self._den)

    @property
    def d(self) -> Fraction:
        return Fraction(self._n[3], self._den)

    def coords(self) -> tuple[Fraction, Fraction, Fraction, Fraction]:
        return (self.a, self.b, self.c, self.d)

    def is_zero(self) -> bool:
        return not any(self._n)

    def is_rational(self) -> bool:
        n = self._n
        return n[1] == 0 and n[2] == 0 and n[3] == 0

    def is_real(self) -> bool:
        return self._n[2] == 0 and self._n[3] == 0

    # -- arithmetic --------------------------------------------------------
    def __add__(self, other):
        other = as_field(other)
        if other is NotImplemented:
            return NotImplemented
        p, q = self._n, other._n
        d1, d2 = self._den, other._den
        if d1 == d2:
            return FieldElem._raw(p[0] + q[0], p[1] + q[1], p[2] + q[2], p[3] + q[3], d1)
        return FieldElem._raw(
            p[0] * d2 + q[0] * d1,
            p[1] * d2 + q[1] * d1,
            p[2] * d2 + q[2] * d1,
            p[3] * d2 + q[3] * d1,
            d1 * d2,
        )

    __radd__ = __add__

    def __neg__(self):
        n = self._n
        return FieldElem._raw(-n[0], -n[1], -n[2], -n[3], self._den)

    def __sub__(self, other):
        other = as_field(other)
        if other is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        other = as_field(other)
        if other is NotImplemented:
            return NotImplemented
        return other + (-self)

    def __mul__(self, other):
        other = as_field(other)
        if other is NotImplemented:
            return NotImplemented
        a, b, c, d = self._n
        e, f, g, h = other._n
        # s3^2 = 3, i^2 = -1
        r0 = a * e + 3 * b * f - c * g - 3 * d * h
        r1 = a * f + b * e - c * h - d * g
        r2 = a * g + c * e + 3 * b * h + 3 * d * f
        r3 = a * h + d * e + b * g + c * f
        return FieldElem._raw(r0, r1, r2, r3, self._den * other._den)

    __rmul__ = __mul__

    def conj(self) -> "FieldElem":
        n = self._n
        return FieldElem._raw(n[0], n[1], -n[2], -n[3], self._den)

    def inv(self) -> "FieldElem":
        if self.is_zero():
            raise ZeroDivisionError("inverse of zero in Q(i, sqrt3)")
        # x * conj(x) lies in Q(sqrt3); invert that with its sqrt3-conjugate.
        a, b, c, d = self._n
        e = a * a + 3 * b * b + c * c + 3 * d * d
        f = 2 * (a * b + c * d)
        nrm = e * e - 3 * f * f
        cj = (a, b, -c, -d)
        # conj(x) * (e - f s3)
        r0 = cj[0] * e - 3 * cj[1] * f
        r1 = cj[1] * e - cj[0] * f
        r2 = cj[2] * e - 3 * cj[3] * f
        r3 = cj[3] * e - cj[2] * f
        den = self._den
        return FieldElem._raw(r0 * den, r1 * den, r2 * den, r3 * den, nrm)

    def __truediv__(self, other):
        other = as_field(other)
        if other is NotImplemented:
            return NotImplemented
        return self * other.inv()

    def __rtruediv__(self, other):
        other = as_field(other)
        if other is NotImplemented:
            return NotImplemented
        return other * self.inv()

    def __pow__(self, k: int):
        if not isinstance(k, int):
            return NotImplemented
        if k < 0:
            return self.inv() ** (-k)
        result, base = ONE, self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    # -- comparison / hashing ---------------------------------------------
    def __eq__(self, other):
        other = as_field(other)
        if other is NotImplemented:
            return NotImplemented
        return self._n == other._n and self._den == other._den

    def __hash__(self):
        if self._hash is None:
            if self.is_rational():
                self._hash = hash(Fraction(self._n[0], self._den))
            else:
                self._hash = hash((self._n, self._den))
        return self._hash

    def __bool__(self):
        return not self.is_zero()

    # -- conversion --------------------------------------------------------
    def to_complex(self) -> complex:
        return field_to_complex(self)

    def __complex__(self):
        return self.to_complex()

    def __repr__(self):
        return f"FieldElem({self})"

    def __str__(self):
        labels = ("", "s3", "i", "s3i")
        parts = []
        for label, val in zip(labels, self.coords()):
            if val == 0:
                continue
            num = str(val)
            if not label:
                parts.append(num)
            elif val == 1:
                parts.append(label)
            elif val == -1:
                parts.append("-" + label)
            else:
                parts.append(f"{num}*{label}")
        if not parts:
            return "0"
        out = parts[0]
        for p in parts[1:]:
            out += " - " + p[1:] if p.startswith("-") else " + " + p
        return out


def as_field(x):
    """Coerce ints, Fractions and FieldElems; NotImplemented otherwise."""
    if isinstance(x, FieldElem):
        return x
    if isinstance(x, bool):
        return FieldElem._raw(int(x), 0, 0, 0, 1)
    if isinstance(x, int):
        return FieldElem._raw(x, 0, 0, 0, 1)
    if isinstance(x, Rational):
        return FieldElem._raw(x.numerator, 0, 0, 0, x.denominator)
    return NotImplemented


ZERO = FieldElem()
ONE = FieldElem(1)
I = FieldElem(0, 0, 1)
S3 = FieldElem(0, 1)
S3I = FieldElem(0, 0, 0, 1)


def field_add(x: FieldElem, y: FieldElem) -> FieldElem:
    return x + y


def field_mul(x: FieldElem, y: FieldElem) -> FieldElem:
    return x * y


def field_inv(x: FieldElem) -> FieldElem:
    return x.inv()


def field_conj(x: FieldElem) -> FieldElem:
    return x.conj()


def _real_part_float(n0: int, n1: int, den: int) -> float:
    """Round (n0 + n1*sqrt3)/den to a double, guarding against cancellation."""
    if n1 == 0:
        return float(Fraction(n0, den))
    sign = 1 if n1 > 0 else -1
    bits = 128 + max(n0.bit_length(), n1.bit_length())
    while True:
        scale = 1 << bits
        root = math.isqrt(3 * n1 * n1 * scale * scale)
        approx = Fraction(n0 * scale + sign * root, scale * den)
        # isqrt error < 1 unit in the last place of `scale`
        err = Fraction(1, scale * den)
        if approx == 0 or abs(approx) > err * (1 << 60):
            return float(approx)
        bits *= 2


def field_to_complex(x: FieldElem) -> complex:
    """Nearest double-precision complex value; OverflowError if out of range."""
    n0, n1, n2, n3 = x._n
    return complex(_real_part_float(n0, n1, x._den), _real_part_float(n2, n3, x._den))
