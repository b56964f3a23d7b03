"""Exact decimal fixed-point numbers and outward-rounded decimal intervals.

A :class:`FixedDec` is ``sign * mantissa * 10**-scale`` with an arbitrary
precision integer mantissa.  Addition, subtraction and multiplication are
exact; the only places where information is lost are the explicit rounding
functions :func:`round_to_scale` and :func:`div_round`, and the interval
operations when given a ``work_scale`` (endpoints are then rounded outward).
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Union


class Rounding(enum.Enum):
    DOWN = "down"  # toward -inf
    UP = "up"  # toward +inf
    NEAREST = "nearest"  # ties away from zero


DOWN = Rounding.DOWN
UP = Rounding.UP
NEAREST = Rounding.NEAREST


def round_div(num: int, den: int, mode: Rounding) -> int:
    """Round the rational ``num / den`` to an integer (``den > 0``)."""
    if den <= 0:
        raise ValueError("denominator must be positive")
    q, r = divmod(num, den)
    if r == 0 or mode is DOWN:
        return q
    if mode is UP:
        return q + 1
    twice = 2 * r
    if twice > den:
        return q + 1
    if twice < den:
        return q
    return q + 1 if num > 0 else q


_NUM_RE = re.compile(r"^\s*([+-])?\s*(\d*)(?:\.(\d*))?\s*$")


@dataclass(frozen=True, eq=False)
class FixedDec:
    """Exact decimal ``sign * mantissa * 10**-scale``."""

    sign: int
    mantissa: int
    scale: int

    def __post_init__(self):
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")
        if self.mantissa < 0 or self.scale < 0:
            raise ValueError("mantissa and scale must be non-negative")
        if self.mantissa == 0 and self.sign != 1:
            object.__setattr__(self, "sign", 1)

    # -- construction -------------------------------------------------------

    @classmethod
    def from_units(cls, units: int, scale: int) -> FixedDec:
        """Number whose value is ``units * 10**-scale``."""
        return cls(-1 if units < 0 else 1, abs(units), scale)

    @classmethod
    def from_int(cls, n: int) -> FixedDec:
        return cls.from_units(n, 0)

    @classmethod
    def parse(cls, text: str) -> FixedDec:
        m = _NUM_RE.match(text)
        if m is None or not (m.group(2) or m.group(3)):
            raise ValueError(f"not a decimal numeral: {text!r}")
        sign, whole, frac = m.group(1), m.group(2) or "0", m.group(3) or ""
        units = int(whole + frac)
        return cls.from_units(-units if sign == "-" else units, len(frac))

    @classmethod
    def from_fraction(cls, q: Fraction, scale: int, mode: Rounding) -> FixedDec:
        q = Fraction(q)
        return cls.from_units(round_div(q.numerator * 10**scale, q.denominator, mode), scale)

    @classmethod
    def coerce(cls, x: Union[FixedDec, int, str]) -> FixedDec:
        if isinstance(x, FixedDec):
            return x
        if isinstance(x, int):
            return cls.from_int(x)
        if isinstance(x, str):
            return cls.parse(x)
        raise TypeError(f"cannot convert {type(x).__name__} to FixedDec")

    # -- views --------------------------------------------------------------

    @property
    def units(self) -> int:
        return self.sign * self.mantissa

    def to_fraction(self) -> Fraction:
        return Fraction(self.units, 10**self.scale)

    def units_at(self, scale: int) -> int:
        """Integer ``u`` with ``self == u * 10**-scale`` (``scale >= self.scale``)."""
        if scale < self.scale:
            raise ValueError("rescaling down is not exact; use round_to_scale")
        return self.units * 10 ** (scale - self.scale)

    def rescale(self, scale: int) -> FixedDec:
        return FixedDec.from_units(self.units_at(scale), scale)

    def is_zero(self) -> bool:
        return self.mantissa == 0

    def int_digits(self) -> int:
        """Number of decimal digits before the point (at least 1)."""
        return max(1, len(str(self.mantissa // 10**self.scale)))

    def __str__(self) -> str:
        digits = str(self.mantissa).rjust(self.scale + 1, "0")
        head, tail = digits[: len(digits) - self.scale], digits[len(digits) - self.scale :]
        body = f"{head}.{tail}" if self.scale else head
        return ("-" if self.sign < 0 else "") + body

    def __repr__(self) -> str:
        return f"FixedDec('{self}')"

    # -- comparison ---------------------------------------------------------

    def _aligned(self, other) -> tuple[int, int]:
        other = FixedDec.coerce(other)
        s = max(self.scale, other.scale)
        return self.units_at(s), other.units_at(s)

    def __eq__(self, other):
        if not isinstance(other, (FixedDec, int)):
            return NotImplemented
        a, b = self._aligned(other)
        return a == b

    def __hash__(self):
        return hash(self.to_fraction())

    def __lt__(self, other):
        a, b = self._aligned(other)
        return a < b

    def __le__(self, other):
        a, b = self._aligned(other)
        return a <= b

    def __gt__(self, other):
        a, b = self._aligned(other)
        return a > b

    def __ge__(self, other):
        a, b = self._aligned(other)
        return a >= b

    # -- exact arithmetic ---------------------------------------------------

    def __add__(self, other):
        if not isinstance(other, (FixedDec, int)):
            return NotImplemented
        other = FixedDec.coerce(other)
        s = max(self.scale, other.scale)
        return FixedDec.from_units(self.units_at(s) + other.units_at(s), s)

    __radd__ = __add__

    def __neg__(self):
        return FixedDec.from_units(-self.units, self.scale)

    def __sub__(self, other):
        if not isinstance(other, (FixedDec, int)):
            return NotImplemented
        return self + (-FixedDec.coerce(other))

    def __rsub__(self, other):
        return FixedDec.coerce(other) - self

    def __mul__(self, other):
        if not isinstance(other, (FixedDec, int)):
            return NotImplemented
        other = FixedDec.coerce(other)
        return FixedDec.from_units(self.units * other.units, self.scale + other.scale)

    __rmul__ = __mul__

    def __abs__(self):
        return FixedDec(1, self.mantissa, self.scale)


ZERO = FixedDec(1, 0, 0)
ONE = FixedDec(1, 1, 0)


def add(a: FixedDec, b: FixedDec) -> FixedDec:
    return a + b


def sub(a: FixedDec, b: FixedDec) -> FixedDec:
    return a - b


def mul(a: FixedDec, b: FixedDec) -> FixedDec:
    return a * b


def round_to_scale(a: FixedDec, s: int, mode: Rounding = NEAREST) -> FixedDec:
    if s < 0:
        raise ValueError("scale must be non-negative")
    if s >= a.scale:
        return a.rescale(s)
    return FixedDec.from_units(round_div(a.units, 10 ** (a.scale - s), mode), s)


def div_round(a: FixedDec, b: FixedDec, s: int, mode: Rounding = NEAREST) -> FixedDec:
    """``a / b`` rounded to ``s`` fractional digits."""
    if b.is_zero():
        raise ZeroDivisionError("division by zero FixedDec")
    num = a.units * 10 ** (b.scale + s)
    den = b.units * 10**a.scale
    if den < 0:
        num, den = -num, -den
    return FixedDec.from_units(round_div(num, den, mode), s)


# ---------------------------------------------------------------------------
# Intervals
# ---------------------------------------------------------------------------

Scalar = Union["DecInterval", FixedDec, int]


@dataclass(frozen=True)
class DecInterval:
    """Closed interval ``[lo, hi]`` with exact decimal endpoints."""

    lo: FixedDec
    hi: FixedDec

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError(f"empty interval [{self.lo}, {self.hi}]")

    @classmethod
    def point(cls, x: Union[FixedDec, int, str]) -> DecInterval:
        x = FixedDec.coerce(x)
        return cls(x, x)

    @classmethod
    def coerce(cls, x: Scalar) -> DecInterval:
        return x if isinstance(x, DecInterval) else cls.point(x)

    @classmethod
    def enclose(cls, lo: Fraction, hi: Fraction, scale: int) -> DecInterval:
        """Smallest interval at ``scale`` containing the rationals ``[lo, hi]``."""
        return cls(FixedDec.from_fraction(lo, scale, DOWN), FixedDec.from_fraction(hi, scale, UP))

    def contains(self, x) -> bool:
        q = x.to_fraction() if isinstance(x, FixedDec) else Fraction(x)
        return self.lo.to_fraction() <= q <= self.hi.to_fraction()

    def encloses(self, other: DecInterval) -> bool:
        return self.lo <= other.lo and other.hi <= self.hi

    def contains_zero(self) -> bool:
        return self.lo <= 0 <= self.hi

    def width(self) -> FixedDec:
        return self.hi - self.lo

    def mid(self) -> Fraction:
        return (self.lo.to_fraction() + self.hi.to_fraction()) / 2

    def mag(self) -> FixedDec:
        return max(abs(self.lo), abs(self.hi))

    def __neg__(self):
        return DecInterval(-self.hi, -self.lo)

    def __str__(self):
        return f"[{self.lo}, {self.hi}]"


def _outward(lo: FixedDec, hi: FixedDec, work_scale) -> DecInterval:
    if work_scale is not None:
        lo = round_to_scale(lo, work_scale, DOWN)
        hi = round_to_scale(hi, work_scale, UP)
    return DecInterval(lo, hi)


def i_add(x: Scalar, y: Scalar, work_scale: int | None = None) -> DecInterval:
    x, y = DecInterval.coerce(x), DecInterval.coerce(y)
    return _outward(x.lo + y.lo, x.hi + y.hi, work_scale)


def i_sub(x: Scalar, y: Scalar, work_scale: int | None = None) -> DecInterval:
    x, y = DecInterval.coerce(x), DecInterval.coerce(y)
    return _outward(x.lo - y.hi, x.hi - y.lo, work_scale)


def i_mul(x: Scalar, y: Scalar, work_scale: int | None = None) -> DecInterval:
    x, y = DecInterval.coerce(x), DecInterval.coerce(y)
    if x.lo == x.hi and y.lo == y.hi:
        p = x.lo * y.lo
        return _outward(p, p, work_scale)
    ps = (x.lo * y.lo, x.lo * y.hi, x.hi * y.lo, x.hi * y.hi)
    return _outward(min(ps), max(ps), work_scale)


def i_div_scalar(x: Scalar, d: Scalar, work_scale: int) -> DecInterval:
    """Enclosure of ``x / d``; ``d`` must not contain zero."""
    x, d = DecInterval.coerce(x), DecInterval.coerce(d)
    if d.contains_zero():
        raise ZeroDivisionError(f"divisor interval {d} contains zero")
    qs = [
        a.to_fraction() / b.to_fraction() for a in (x.lo, x.hi) for b in (d.lo, d.hi)
    ]
    return DecInterval.enclose(min(qs), max(qs), work_scale)


def i_pow_int(x: Scalar, n: int, work_scale: int | None = None) -> DecInterval:
    if n < 0:
        raise ValueError("negative exponents are not supported")
    x = DecInterval.coerce(x)
    if n == 0:
        return DecInterval.point(ONE)
    lo_n, hi_n = _pow_exact(x.lo, n), _pow_exact(x.hi, n)
    if n % 2:
        return _outward(lo_n, hi_n, work_scale)
    if x.contains_zero():
        return _outward(ZERO, max(lo_n, hi_n), work_scale)
    return _outward(min(lo_n, hi_n), max(lo_n, hi_n), work_scale)


def _pow_exact(a: FixedDec, n: int) -> FixedDec:
    return FixedDec.from_units(a.units**n, a.scale * n)


def i_abs(x: Scalar) -> DecInterval:
    x = DecInterval.coerce(x)
    if x.contains_zero():
        return DecInterval(ZERO, x.mag())
    return DecInterval(min(abs(x.lo), abs(x.hi)), x.mag())


def hull(x: Scalar, y: Scalar) -> DecInterval:
    x, y = DecInterval.coerce(x), DecInterval.coerce(y)
    return DecInterval(min(x.lo, y.lo), max(x.hi, y.hi))


def width(x: DecInterval) -> FixedDec:
    return x.width()


def widen(x: Scalar, r: Fraction, work_scale: int) -> DecInterval:
    """``x`` enlarged by ``r >= 0`` on both sides, rounded outward."""
    x = DecInterval.coerce(x)
    return DecInterval.enclose(x.lo.to_fraction() - r, x.hi.to_fraction() + r, work_scale)
