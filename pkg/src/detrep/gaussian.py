"""Exact Gaussian-rational scalars.

``QQi`` is a complex number whose real and imaginary parts are rationals
(backed by ``gmpy2.mpq``).  It is the coefficient type of every exact-mode
polynomial and matrix in the package.
"""

from fractions import Fraction
from numbers import Rational

import gmpy2
from gmpy2 import mpq

_MPQ = type(mpq(0))


def to_mpq(x):
    if isinstance(x, _MPQ):
        return x
    if isinstance(x, (int, Fraction)) or isinstance(x, Rational):
        return mpq(x)
    if isinstance(x, str):
        return mpq(Fraction(x.strip()))
    if isinstance(x, float):
        # floats are accepted only when they are exactly representable
        return mpq(Fraction(x))
    raise TypeError(f"cannot convert {type(x).__name__} to a rational")


class QQi:
    """A Gaussian rational ``re + i*im``."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        self.re = to_mpq(re)
        self.im = to_mpq(im)

    @classmethod
    def coerce(cls, x):
        if isinstance(x, QQi):
            return x
        if isinstance(x, complex):
            return cls(Fraction(x.real), Fraction(x.imag))
        return cls(x)

    # arithmetic
    def __add__(self, other):
        if isinstance(other, QQi):
            return QQi._make(self.re + other.re, self.im + other.im)
        if isinstance(other, (int, _MPQ, Fraction)):
            return QQi._make(self.re + other, self.im)
        return NotImplemented

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, QQi):
            return QQi._make(self.re - other.re, self.im - other.im)
        if isinstance(other, (int, _MPQ, Fraction)):
            return QQi._make(self.re - other, self.im)
        return NotImplemented

    def __rsub__(self, other):
        if isinstance(other, (int, _MPQ, Fraction)):
            return QQi._make(other - self.re, -self.im)
        return NotImplemented

    def __mul__(self, other):
        if isinstance(other, QQi):
            a, b, c, d = self.re, self.im, other.re, other.im
            return QQi._make(a * c - b * d, a * d + b * c)
        if isinstance(other, (int, _MPQ, Fraction)):
            return QQi._make(self.re * other, self.im * other)
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, QQi):
            c, d = other.re, other.im
            den = c * c + d * d
            if not den:
                raise ZeroDivisionError("Gaussian rational division by zero")
            a, b = self.re, self.im
            return QQi._make((a * c + b * d) / den, (b * c - a * d) / den)
        if isinstance(other, (int, _MPQ, Fraction)):
            if not other:
                raise ZeroDivisionError("Gaussian rational division by zero")
            return QQi._make(self.re / other, self.im / other)
        return NotImplemented

    def __rtruediv__(self, other):
        if isinstance(other, (int, _MPQ, Fraction)):
            return QQi(other) / self
        return NotImplemented

    def __pow__(self, k):
        if not isinstance(k, int):
            return NotImplemented
        if k < 0:
            return QQi(1) / self ** (-k)
        result, base = QQi._make(mpq(1), mpq(0)), self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def __neg__(self):
        return QQi._make(-self.re, -self.im)

    def __pos__(self):
        return self

    def conjugate(self):
        return QQi._make(self.re, -self.im)

    def abs2(self):
        """Squared modulus, exact."""
        return self.re * self.re + self.im * self.im

    def __abs__(self):
        return abs(complex(self))

    # comparisons and conversions
    def __eq__(self, other):
        if isinstance(other, QQi):
            return self.re == other.re and self.im == other.im
        if isinstance(other, (int, _MPQ, Fraction)):
            return self.im == 0 and self.re == other
        if isinstance(other, complex):
            return complex(self) == other
        return NotImplemented

    def __hash__(self):
        if self.im == 0:
            return hash(Fraction(int(self.re.numerator), int(self.re.denominator)))
        return hash((self.re, self.im))

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __repr__(self):
        return f"QQi({_fmt(self.re)!r}, {_fmt(self.im)!r})"

    def __str__(self):
        if not self.im:
            return _fmt(self.re)
        if not self.re:
            return f"{_fmt(self.im)}i"
        sign = "+" if self.im > 0 else "-"
        return f"({_fmt(self.re)}{sign}{_fmt(abs(self.im))}i)"

    @staticmethod
    def _make(re, im):
        z = QQi.__new__(QQi)
        z.re = re
        z.im = im
        return z


def _fmt(q):
    if q.denominator == 1:
        return str(q.numerator)
    return f"{q.numerator}/{q.denominator}"


ZERO = QQi(0)
ONE = QQi(1)


def parse_exact(text):
    """Parse ``"1/3"``, ``"-2"``, ``"1/2+3/4i"`` or ``"2i"`` into a QQi."""
    s = text.strip().replace(" ", "")
    if not s.endswith(("i", "j")):
        return QQi(s)
    body = s[:-1]
    # split at the last sign that is not the leading one
    for pos in range(len(body) - 1, 0, -1):
        if body[pos] in "+-" and body[pos - 1] not in "eE/":
            re_part, im_part = body[:pos], body[pos:]
            break
    else:
        re_part, im_part = "0", body
    if im_part in ("", "+"):
        im_part = "1"
    elif im_part == "-":
        im_part = "-1"
    return QQi(re_part, im_part)


def exact_sqrt(q):
    """Square root of a nonnegative rational if it is rational, else None."""
    q = to_mpq(q)
    if q < 0:
        return None
    num, den = q.numerator, q.denominator
    if gmpy2.is_square(num) and gmpy2.is_square(den):
        return mpq(gmpy2.isqrt(num), gmpy2.isqrt(den))
    return None
