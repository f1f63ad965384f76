"""Two independent arithmetic back ends for bound evaluation.

``MpArith``: mpmath binary floating point, 128-bit mantissa, round to nearest
(mpmath's default rounding), unbounded exponent. Values like 2^-10240 are
represented directly, so this is the log-domain-safe primary path.

``ExactArith``: Python Fractions. Square roots are integer square roots
carrying at least 320 significant bits; logarithms use ``decimal`` at 120
digits with an effectively unbounded exponent range. Used as the cross-check.
"""

from __future__ import annotations

import decimal
import math
from fractions import Fraction

import mpmath

MP = mpmath.MPContext()
MP.prec = 128

_DEC = decimal.Context(prec=120, Emin=-10 ** 15, Emax=10 ** 15)
_SQRT_BITS = 320


def as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, float)):
        return Fraction(x)
    if isinstance(x, str):
        return parse_number(x)
    if isinstance(x, MP.mpf) or isinstance(x, mpmath.mpf):
        man, exp = MP.mpf(x).man_exp
        return Fraction(int(man)) * (Fraction(2) ** int(exp))
    return Fraction(x)


def parse_number(text) -> Fraction:
    """Parse '2^64', '2**-10', '3*2^60', '1/3', '0.25' or plain integers exactly."""
    if isinstance(text, (int, float, Fraction)):
        return Fraction(text)
    s = str(text).replace(" ", "").replace("**", "^")
    if "*" in s:
        out = Fraction(1)
        for part in s.split("*"):
            out *= parse_number(part)
        return out
    if "^" in s:
        base, exp = s.split("^", 1)
        e = parse_number(exp)
        if e.denominator != 1:
            raise ValueError(f"non-integer exponent in {text!r}")
        return parse_number(base) ** int(e)
    return Fraction(s)


class MpArith:
    name = "mp"

    def num(self, x):
        if isinstance(x, Fraction):
            return MP.mpf(x.numerator) / x.denominator
        return MP.mpf(x)

    def sqrt(self, x):
        return MP.sqrt(x)

    def ln(self, x):
        return MP.log(x)

    def pow2(self, e):
        e = as_fraction(e)
        if e.denominator == 1:
            return MP.ldexp(MP.mpf(1), int(e))
        return MP.power(2, self.num(e))


def _isqrt_fraction(x: Fraction) -> Fraction:
    if x < 0:
        raise ValueError("square root of a negative number")
    if x == 0:
        return Fraction(0)
    a, b = x.numerator, x.denominator
    # choose k so that sqrt(a / b * 4^k) has about _SQRT_BITS bits
    k = _SQRT_BITS - (a.bit_length() - b.bit_length()) // 2
    if k >= 0:
        s = math.isqrt((a << (2 * k)) // b)
        return Fraction(s, 1 << k)
    s = math.isqrt(a // (b << (-2 * k)))
    return Fraction(s << (-k))


def _to_decimal(x: Fraction) -> decimal.Decimal:
    return _DEC.divide(decimal.Decimal(x.numerator), decimal.Decimal(x.denominator))


class ExactArith:
    name = "exact"

    def num(self, x):
        return as_fraction(x)

    def sqrt(self, x):
        return _isqrt_fraction(as_fraction(x))

    def ln(self, x):
        d = _DEC.ln(_to_decimal(as_fraction(x)))
        return Fraction(d)

    def pow2(self, e):
        e = as_fraction(e)
        if e.denominator == 1:
            return Fraction(2) ** int(e)
        if e.denominator == 2:
            whole = Fraction(2) ** ((e.numerator - 1) // 2)
            return whole * _isqrt_fraction(Fraction(2))
        return Fraction(_DEC.power(decimal.Decimal(2), _to_decimal(e)))


MP_ARITH = MpArith()
EXACT_ARITH = ExactArith()


def to_mp(x):
    if isinstance(x, Fraction):
        return MP.mpf(x.numerator) / x.denominator
    return MP.mpf(x)


def log2_of(x) -> float:
    """Base-2 logarithm as a float (-inf for 0), safe for tiny values."""
    v = to_mp(x)
    if v == 0:
        return float("-inf")
    return float(MP.log(v, 2))


def relative_difference(a, b) -> float:
    a, b = to_mp(a), to_mp(b)
    if a == b:
        return 0.0
    return float(abs(a - b) / max(abs(a), abs(b)))
