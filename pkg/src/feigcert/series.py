"""Truncated power series in ``w`` modulo ``w**(K+1)``.

Two representations of the same algebra live here:

* :class:`TruncSeries` -- coefficients are :class:`~feigcert.decfix.DecInterval`
  and the product is the schoolbook Cauchy product.  Simple and slow; this is
  the reference route.
* :class:`BallSeries` -- exact binary fixed-point integer midpoints plus one
  radius bounding the l1 norm of the error series.  Products go through
  Kronecker substitution (a single big-integer multiplication), and
  polynomial evaluation uses Paterson-Stockmeyer.  The l1 norm is
  submultiplicative on the truncated ring, which is what makes a single
  radius sufficient.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Sequence, Union

from .decfix import (
    DecInterval,
    FixedDec,
    Scalar,
    i_add,
    i_div_scalar,
    i_mul,
    i_sub,
)

try:
    import gmpy2

    _mpz = gmpy2.mpz

    def _from_bytes(buf) -> object:
        return gmpy2.mpz.from_bytes(buf, "little")

    def _to_bytes(x, length: int) -> bytes:
        return x.to_bytes(length, "little")

except ImportError:  # pragma: no cover - gmpy2 is a declared dependency
    _mpz = int

    def _from_bytes(buf) -> int:
        return int.from_bytes(buf, "little")

    def _to_bytes(x, length: int) -> bytes:
        return int(x).to_bytes(length, "little")


class OrderMismatch(ValueError):
    pass


# ---------------------------------------------------------------------------
# Interval-coefficient series (reference route)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TruncSeries:
    coeffs: tuple[DecInterval, ...]

    def __post_init__(self):
        if not self.coeffs:
            raise ValueError("a truncated series needs at least one coefficient")

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    @classmethod
    def of(cls, values: Sequence[Scalar], order: int | None = None) -> TruncSeries:
        vals = [DecInterval.coerce(v) for v in values]
        if order is None:
            order = len(vals) - 1
        vals = vals[: order + 1]
        vals += [DecInterval.point(0)] * (order + 1 - len(vals))
        return cls(tuple(vals))

    @classmethod
    def constant(cls, c: Scalar, order: int) -> TruncSeries:
        return cls.of([c], order)

    def contains(self, values: Sequence[Fraction]) -> bool:
        vals = list(values)[: self.order + 1]
        vals += [Fraction(0)] * (self.order + 1 - len(vals))
        return all(c.contains(v) for c, v in zip(self.coeffs, vals))


def _check(a: TruncSeries, b: TruncSeries) -> None:
    if a.order != b.order:
        raise OrderMismatch(f"series orders differ: {a.order} vs {b.order}")


def s_add(a: TruncSeries, b: TruncSeries, work_scale: int | None = None) -> TruncSeries:
    _check(a, b)
    return TruncSeries(tuple(i_add(x, y, work_scale) for x, y in zip(a.coeffs, b.coeffs)))


def s_sub(a: TruncSeries, b: TruncSeries, work_scale: int | None = None) -> TruncSeries:
    _check(a, b)
    return TruncSeries(tuple(i_sub(x, y, work_scale) for x, y in zip(a.coeffs, b.coeffs)))


def s_scale(a: TruncSeries, c: Scalar, work_scale: int | None = None) -> TruncSeries:
    return TruncSeries(tuple(i_mul(x, c, work_scale) for x in a.coeffs))


def s_mul(a: TruncSeries, b: TruncSeries, work_scale: int | None = None) -> TruncSeries:
    """Truncated Cauchy product; each term is enclosed before summation."""
    _check(a, b)
    out = []
    for j in range(a.order + 1):
        acc = DecInterval.point(0)
        for i in range(j + 1):
            acc = i_add(acc, i_mul(a.coeffs[i], b.coeffs[j - i], work_scale))
        out.append(acc)
    return TruncSeries(tuple(out))


def s_poly_eval_horner(
    p: Sequence[Scalar], x: TruncSeries, work_scale: int | None = None
) -> TruncSeries:
    """Enclosure of ``sum p[i] * x**i`` in the truncated ring."""
    if not p:
        return TruncSeries.constant(0, x.order)
    acc = TruncSeries.constant(p[-1], x.order)
    for c in reversed(p[:-1]):
        acc = s_mul(acc, x, work_scale)
        acc = TruncSeries((i_add(acc.coeffs[0], c, work_scale),) + acc.coeffs[1:])
    return acc


def s_div_by_affine(
    a: TruncSeries, c0: Scalar, c1: Scalar, work_scale: int
) -> TruncSeries:
    """Series ``g`` with ``(c0 + c1*w) * g == a`` modulo ``w**(K+1)``."""
    c0 = DecInterval.coerce(c0)
    if c0.contains_zero():
        raise ZeroDivisionError("affine divisor has a zero constant term")
    out = [i_div_scalar(a.coeffs[0], c0, work_scale)]
    for j in range(1, a.order + 1):
        num = i_sub(a.coeffs[j], i_mul(c1, out[-1], work_scale), work_scale)
        out.append(i_div_scalar(num, c0, work_scale))
    return TruncSeries(tuple(out))


# ---------------------------------------------------------------------------
# Ball series (fast route)
# ---------------------------------------------------------------------------


def _round_shift(x: int, p: int) -> int:
    """``x / 2**p`` rounded to nearest (error at most 1/2)."""
    return (x + (1 << (p - 1))) >> p if p else x


def _ceil_shift(x: int, p: int) -> int:
    """``ceil(x / 2**p)`` for ``x >= 0``."""
    return -((-x) >> p)


@lru_cache(maxsize=256)
def _offset(nbytes: int, slots: int):
    """Packed constant with ``2**(bits-1)`` in every slot."""
    half = (1 << (8 * nbytes - 1)).to_bytes(nbytes, "little")
    return _from_bytes(half * slots)


def _slot_bytes(bound: int) -> int:
    """Bytes per slot able to hold signed values of magnitude ``<= bound``."""
    return (bound.bit_length() + 2 + 7) // 8


def _pack(values: Sequence[int], nbytes: int):
    half = 1 << (8 * nbytes - 1)
    buf = b"".join((v + half).to_bytes(nbytes, "little") for v in values)
    return _from_bytes(buf) - _offset(nbytes, len(values))


def _unpack(x, nbytes: int, total_slots: int, keep: int) -> list[int]:
    """First ``keep`` signed slots of a packed integer holding ``total_slots``."""
    half = 1 << (8 * nbytes - 1)
    buf = memoryview(_to_bytes(x + _offset(nbytes, total_slots), nbytes * total_slots))
    fb = int.from_bytes
    return [fb(buf[i : i + nbytes], "little") - half for i in range(0, keep * nbytes, nbytes)]


def kronecker_mul(a: Sequence[int], b: Sequence[int], keep: int) -> list[int]:
    """Exact integer convolution of ``a`` and ``b``, first ``keep`` terms."""
    amax = max(map(abs, a))
    bsum = sum(map(abs, b))
    if amax == 0 or bsum == 0:
        return [0] * keep
    nbytes = _slot_bytes(amax * bsum)
    total = len(a) + len(b) - 1
    prod = _pack(a, nbytes) * _pack(b, nbytes)
    out = _unpack(prod, nbytes, total, min(keep, total))
    return out + [0] * (keep - len(out))


class Ball:
    """Real number ``mid * 2**-prec`` with error at most ``rad * 2**-prec``."""

    __slots__ = ("mid", "rad", "prec")

    def __init__(self, mid: int, rad: int, prec: int):
        self.mid, self.rad, self.prec = mid, rad, prec

    @classmethod
    def from_fraction(cls, q, prec: int) -> Ball:
        q = Fraction(q)
        num = q.numerator << prec
        mid, r = divmod(num, q.denominator)
        if 2 * r >= q.denominator:
            mid += 1
        return cls(mid, 0 if r == 0 else 1, prec)

    def lo(self) -> Fraction:
        return Fraction(self.mid - self.rad, 1 << self.prec)

    def hi(self) -> Fraction:
        return Fraction(self.mid + self.rad, 1 << self.prec)

    def __repr__(self):
        return f"Ball({float(Fraction(self.mid, 1 << self.prec))!r} +- 2^-{self.prec}*{self.rad})"


class BallSeries:
    """Series with integer midpoints at ``2**-prec`` and an l1 error radius.

    The represented set is every series ``t`` (truncated at order ``K``) with
    ``sum_j |t_j - mids[j] * 2**-prec| <= rad * 2**-prec``.
    """

    __slots__ = ("mids", "rad", "prec")

    def __init__(self, mids: list[int], rad: int, prec: int):
        self.mids, self.rad, self.prec = mids, rad, prec

    # -- construction -------------------------------------------------------

    @property
    def order(self) -> int:
        return len(self.mids) - 1

    @classmethod
    def zero(cls, order: int, prec: int) -> BallSeries:
        return cls([0] * (order + 1), 0, prec)

    @classmethod
    def constant(cls, c: Union[Ball, Fraction, int], order: int, prec: int) -> BallSeries:
        if not isinstance(c, Ball):
            c = Ball.from_fraction(c, prec)
        return cls([c.mid] + [0] * order, c.rad, prec)

    @classmethod
    def from_fractions(cls, values: Sequence, order: int, prec: int) -> BallSeries:
        mids, rad = [], 0
        for v in list(values)[: order + 1]:
            b = Ball.from_fraction(v, prec)
            mids.append(b.mid)
            rad += b.rad
        mids += [0] * (order + 1 - len(mids))
        return cls(mids, rad, prec)

    @classmethod
    def from_fixed(cls, values: Sequence[FixedDec], order: int, prec: int) -> BallSeries:
        return cls.from_fractions([v.to_fraction() for v in values], order, prec)

    # -- views --------------------------------------------------------------

    def norm_units(self) -> int:
        return sum(map(abs, self.mids))

    def coefficient(self, j: int) -> tuple[Fraction, Fraction]:
        """Rational enclosure ``(lo, hi)`` of coefficient ``j``."""
        d = 1 << self.prec
        return Fraction(self.mids[j] - self.rad, d), Fraction(self.mids[j] + self.rad, d)

    def radius(self) -> Fraction:
        return Fraction(self.rad, 1 << self.prec)

    def to_trunc(self, work_scale: int) -> TruncSeries:
        return TruncSeries(
            tuple(DecInterval.enclose(*self.coefficient(j), work_scale) for j in range(len(self.mids)))
        )

    def contains(self, values: Sequence[Fraction]) -> bool:
        vals = list(values)[: len(self.mids)]
        vals += [Fraction(0)] * (len(self.mids) - len(vals))
        d = 1 << self.prec
        err = sum(abs(Fraction(v) * d - m) for v, m in zip(vals, self.mids))
        return err <= self.rad

    # -- ring operations ----------------------------------------------------

    def _like(self, other: BallSeries) -> None:
        if len(self.mids) != len(other.mids):
            raise OrderMismatch(f"series orders differ: {self.order} vs {other.order}")
        if self.prec != other.prec:
            raise ValueError("series precisions differ")

    def __add__(self, other: BallSeries) -> BallSeries:
        self._like(other)
        return BallSeries([a + b for a, b in zip(self.mids, other.mids)], self.rad + other.rad, self.prec)

    def __sub__(self, other: BallSeries) -> BallSeries:
        self._like(other)
        return BallSeries([a - b for a, b in zip(self.mids, other.mids)], self.rad + other.rad, self.prec)

    def __neg__(self) -> BallSeries:
        return BallSeries([-a for a in self.mids], self.rad, self.prec)

    def add_constant(self, c: Union[Ball, Fraction, int]) -> BallSeries:
        if not isinstance(c, Ball):
            c = Ball.from_fraction(c, self.prec)
        return BallSeries([self.mids[0] + c.mid] + self.mids[1:], self.rad + c.rad, self.prec)

    def scale(self, c: Union[Ball, Fraction, int]) -> BallSeries:
        if not isinstance(c, Ball):
            c = Ball.from_fraction(c, self.prec)
        p = self.prec
        mids = [_round_shift(m * c.mid, p) for m in self.mids]
        err = self.norm_units() * c.rad + self.rad * (abs(c.mid) + c.rad)
        return BallSeries(mids, _ceil_shift(err, p) + _rounding_units(mids), p)

    def __mul__(self, other: BallSeries) -> BallSeries:
        self._like(other)
        p = self.prec
        raw = kronecker_mul(self.mids, other.mids, len(self.mids))
        mids = [_round_shift(c, p) for c in raw]
        err = self.norm_units() * other.rad + self.rad * (other.norm_units() + other.rad)
        return BallSeries(mids, _ceil_shift(err, p) + _rounding_units(mids), p)

    def mul_affine(self, c0: Union[Ball, Fraction], c1: Union[Ball, Fraction]) -> BallSeries:
        """Product with ``c0 + c1*w``."""
        shifted = BallSeries([0] + self.mids[:-1], self.rad, self.prec)
        return self.scale(c0) + shifted.scale(c1)


def _rounding_units(mids: list[int]) -> int:
    # one half-ulp per rounded coefficient
    return (len(mids) + 1) // 2


def _block_sum(coeffs: Sequence[Ball], powers: list[BallSeries], packed: list, nbytes: int) -> BallSeries:
    """``sum coeffs[i] * powers[i]`` as one packed multiply-accumulate."""
    p = powers[0].prec
    n = len(powers[0].mids)
    acc = _mpz(0)
    for c, pk in zip(coeffs, packed):
        if c.mid:
            acc += pk * c.mid
    mids = [_round_shift(v, p) for v in _unpack(acc, nbytes, n, n)]
    err = 0
    for c, pw in zip(coeffs, powers):
        err += abs(c.mid) * pw.rad + c.rad * (pw.norm_units() + pw.rad)
    return BallSeries(mids, _ceil_shift(err, p) + _rounding_units(mids), p)


def poly_eval(coeffs: Sequence[Union[Ball, Fraction, int]], x: BallSeries) -> BallSeries:
    """Enclosure of ``sum coeffs[i] * x**i`` (Paterson-Stockmeyer).

    About ``2*sqrt(d)`` full series products; the remaining work is scalar
    multiples of packed powers.
    """
    p, order = x.prec, x.order
    cs = [c if isinstance(c, Ball) else Ball.from_fraction(c, p) for c in coeffs]
    if not cs:
        return BallSeries.zero(order, p)
    d = len(cs) - 1
    if d == 0:
        return BallSeries.constant(cs[0], order, p)
    b = max(1, math.isqrt(d + 1))
    powers = [BallSeries.constant(1, order, p)]  # x**0 .. x**(b-1)
    while len(powers) < b:
        powers.append(x if len(powers) == 1 else powers[-1] * x)
    blocks = [cs[k : k + b] for k in range(0, d + 1, b)]
    cmax = max(max(map(abs, pw.mids)) for pw in powers) or 1
    csum = max(sum(abs(c.mid) for c in blk) for blk in blocks) or 1
    nbytes = _slot_bytes(cmax * csum)
    packed = [_pack(pw.mids, nbytes) for pw in powers]
    if len(blocks) == 1:
        return _block_sum(blocks[0], powers, packed, nbytes)
    step = powers[-1] * x
    acc = _block_sum(blocks[-1], powers, packed, nbytes)
    for blk in reversed(blocks[:-1]):
        acc = acc * step + _block_sum(blk, powers, packed, nbytes)
    return acc
