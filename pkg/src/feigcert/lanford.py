"""Lanford coordinates and the doubling operator.

A point ``(u, nu_1, ..., nu_K)`` stands for the even function

    psi(z) = 1 - z**2 * (u/10 + sum_i nu_i * w**i),   w = (z**2 - 1) / 2.5

so ``psi(0) == 1`` and evenness hold by construction.  The norm is the l1
norm ``|u| + sum |nu_i|``.

Two routes compute the coordinates of ``T psi(x) = psi(psi(lam*x)) / lam``
(``lam = psi(1) = 1 - u/10``):

* :func:`apply_t_reference` follows the textbook sequence: compose, then
  divide ``1 - T psi`` by ``z**2 = 1 + 2.5 w`` with the forward recurrence.
  That recurrence multiplies errors by 2.5 per coefficient, so it is only
  usable at small orders.
* :func:`t_ball` uses the identity

      1 - T psi = z**2 * B * (2.5*u/10 + y**2 * Ghat(W)) / lam

  where ``y = psi(lam z)``, ``W = (y**2 - 1)/2.5 = z**2 * B`` and
  ``Ghat(x) = sum_i nu_i x**(i-1)``.  The constant ``lam - 1 + u/10``
  vanishes identically, so no division by ``z**2`` is needed and every
  step is a ring operation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from math import comb
from typing import Sequence

from .decfix import (
    NEAREST,
    DecInterval,
    FixedDec,
    Scalar,
    i_add,
    i_div_scalar,
    i_mul,
    i_pow_int,
    i_sub,
    widen,
)
from .series import (
    Ball,
    BallSeries,
    TruncSeries,
    poly_eval,
    s_div_by_affine,
    s_mul,
    s_poly_eval_horner,
    s_scale,
    s_sub,
)

J_DIVISOR = FixedDec.parse("3.669")
W_SCALE = FixedDec.parse("2.5")
W_INV = FixedDec.parse("0.4")
TEN = FixedDec.from_int(10)

_J = Fraction(3669, 1000)
_TWO_FIVE = Fraction(5, 2)
_LOG2_10 = math.log2(10)

# u, nu_1 ... nu_9 of the starting polynomial psi_0, 41 fractional digits each.
PSI0_TABLE = (
    "13.99535280247654509657069657886239000000000",
    "-0.37020336425570944099807863650264000000000",
    "-0.10516441308487059395306704671240000000000",
    "0.04689224531866417356902064258837500000000",
    "-0.00657196434429489515940234119726562500000",
    "-0.00092424880356949042888086870078125000000",
    "0.00060199775715465703408272872656250000000",
    "-0.00007266358160903580114416214843750000000",
    "-0.00003921160572782132082950382843017578125",
    "0.00000105783506805382222151565551757812500",
)


@dataclass(frozen=True)
class LanfordCoords:
    u: FixedDec
    nu: tuple[FixedDec, ...] = ()

    @classmethod
    def parse(cls, values: Sequence[str]) -> LanfordCoords:
        u, *nu = [FixedDec.parse(v) for v in values]
        return cls(u, tuple(nu))

    @classmethod
    def from_fractions(cls, u, nu: Sequence, scale: int) -> LanfordCoords:
        """Coordinates rounded to nearest at ``scale``."""
        return cls(
            FixedDec.from_fraction(Fraction(u), scale, NEAREST),
            tuple(FixedDec.from_fraction(Fraction(v), scale, NEAREST) for v in nu),
        )

    @property
    def K(self) -> int:
        return len(self.nu)

    def values(self) -> tuple[FixedDec, ...]:
        return (self.u,) + self.nu

    def fractions(self) -> list[Fraction]:
        return [v.to_fraction() for v in self.values()]

    def lam(self) -> Fraction:
        """``psi(1) = 1 - u/10`` (exact)."""
        return 1 - self.u.to_fraction() / 10

    def padded(self, K: int) -> tuple[FixedDec, ...]:
        zero = FixedDec(1, 0, 0)
        return self.nu + (zero,) * (K - len(self.nu))


PSI0 = LanfordCoords.parse(PSI0_TABLE)


@dataclass(frozen=True)
class CoordEnclosure:
    """Interval enclosures of ``(u, nu_1 ... nu_K)``."""

    u: DecInterval
    nu: tuple[DecInterval, ...]

    def values(self) -> tuple[DecInterval, ...]:
        return (self.u,) + self.nu

    def contains(self, u, nu: Sequence) -> bool:
        if not self.u.contains(u):
            return False
        nu = list(nu) + [0] * (len(self.nu) - len(nu))
        return all(c.contains(v) for c, v in zip(self.nu, nu))

    def norm_upper(self) -> FixedDec:
        total = FixedDec(1, 0, 0)
        for c in self.values():
            total = total + c.mag()
        return total


def norm(c: LanfordCoords) -> FixedDec:
    total = abs(c.u)
    for v in c.nu:
        total = total + abs(v)
    return total


def distance(a: LanfordCoords, b: LanfordCoords) -> FixedDec:
    """Exact ``||a - b||``."""
    K = max(a.K, b.K)
    total = abs(a.u - b.u)
    for x, y in zip(a.padded(K), b.padded(K)):
        total = total + abs(x - y)
    return total


def apply_j(c: LanfordCoords, work_scale: int) -> CoordEnclosure:
    return CoordEnclosure(
        i_div_scalar(c.u, J_DIVISOR, work_scale),
        tuple(DecInterval.point(-v) for v in c.nu),
    )


def full_order(K0: int) -> int:
    """Index of the last possibly nonzero ``mu`` of ``T psi`` for ``psi`` with ``K0`` nus."""
    return 2 * (K0 + 1) ** 2 - 1


# ---------------------------------------------------------------------------
# Fast route: ball series
# ---------------------------------------------------------------------------


def digits_to_bits(digits: int) -> int:
    return math.ceil(digits * _LOG2_10) + 2


def t_ball(c: LanfordCoords, K: int, prec: int) -> BallSeries:
    """Ball enclosure of ``(v/10, mu_1, ..., mu_K)`` for ``T psi``."""
    lam = c.lam()
    if lam == 0:
        raise ZeroDivisionError("psi(1) = 0: the doubling operator is undefined")
    lam2 = lam * lam
    g0 = c.u.to_fraction() / 10
    G = [Ball.from_fraction(g0, prec)] + [Ball.from_fraction(v.to_fraction(), prec) for v in c.nu]

    wt = BallSeries.from_fractions([(lam2 - 1) / _TWO_FIVE, lam2], K, prec)
    A = poly_eval(G, wt)
    z2A = A.mul_affine(Fraction(1), _TWO_FIVE)
    y = z2A.scale(-lam2).add_constant(1)
    B = (A.scale(-2 * lam2) + (z2A * A).scale(lam2 * lam2)).scale(Fraction(2, 5))
    y2 = y * y
    W = y2.add_constant(-1).scale(Fraction(2, 5))
    inner = BallSeries.constant(_TWO_FIVE * g0, K, prec)
    if c.nu:
        inner = inner + y2 * poly_eval(G[1:], W)
    return (B * inner).scale(1 / lam)


def _enclosure_from_ball(gp: BallSeries, work_scale: int) -> CoordEnclosure:
    lo, hi = gp.coefficient(0)
    return CoordEnclosure(
        DecInterval.enclose(10 * lo, 10 * hi, work_scale),
        tuple(DecInterval.enclose(*gp.coefficient(j), work_scale) for j in range(1, len(gp.mids))),
    )


def apply_t(c: LanfordCoords, K: int, work_scale: int, guard: int = 20) -> CoordEnclosure:
    """Enclosures of ``v, mu_1 ... mu_K`` of ``T psi`` at ``work_scale``."""
    return _enclosure_from_ball(t_ball(c, K, digits_to_bits(work_scale + guard)), work_scale)


def phi_u(u: Fraction, v: Fraction) -> Fraction:
    """u-coordinate of ``psi - J(T psi - psi)``."""
    return u - (v - u) / _J


def apply_phi(c: LanfordCoords, K: int, work_scale: int, guard: int = 20) -> CoordEnclosure:
    """Enclosure of ``Phi psi = psi - J(T psi - psi)``; its nu part is exactly T's."""
    t = apply_t(c, K, work_scale, guard)
    u = c.u.to_fraction()
    ends = [phi_u(u, v.to_fraction()) for v in (t.u.lo, t.u.hi)]
    return CoordEnclosure(DecInterval.enclose(min(ends), max(ends), work_scale), t.nu)


# ---------------------------------------------------------------------------
# Reference route: interval series, textbook steps
# ---------------------------------------------------------------------------


def apply_t_reference(c: LanfordCoords, K: int, work_scale: int) -> CoordEnclosure:
    lam = DecInterval.point(FixedDec(1, 1, 0) - c.u * FixedDec.parse("0.1"))
    if lam.contains_zero():
        raise ZeroDivisionError("psi(1) = 0: the doubling operator is undefined")
    ws = work_scale
    lam2 = i_pow_int(lam, 2)
    G = [DecInterval.point(c.u * FixedDec.parse("0.1"))] + [DecInterval.point(v) for v in c.nu]
    one = TruncSeries.constant(1, K)
    z2 = TruncSeries.of([1, W_SCALE], K)

    wt = TruncSeries.of([i_mul(i_sub(lam2, 1), W_INV), lam2], K)
    y = s_sub(one, s_scale(s_mul(z2, s_poly_eval_horner(G, wt, ws), ws), lam2, ws), ws)
    y2 = s_mul(y, y, ws)
    W = s_scale(s_sub(y2, one), W_INV, ws)
    body = s_sub(one, s_mul(y2, s_poly_eval_horner(G, W, ws), ws), ws)
    tpsi = TruncSeries(tuple(i_div_scalar(x, lam, ws) for x in body.coeffs))
    gp = s_div_by_affine(s_sub(one, tpsi), 1, W_SCALE, ws)
    return CoordEnclosure(i_mul(gp.coeffs[0], TEN, ws), gp.coeffs[1:])


# ---------------------------------------------------------------------------
# Taylor coefficients and point values
# ---------------------------------------------------------------------------


def to_taylor(c: LanfordCoords, order: int, work_scale: int | None = None) -> list[DecInterval]:
    """Taylor coefficients ``a_1 ... a_order`` of ``psi`` around 0 (in ``z**2``).

    ``w**i = ((z**2 - 1)/2.5)**i`` expands binomially; ``0.4**i`` is a finite
    decimal so the result is exact unless ``work_scale`` asks for rounding.
    """
    if order < 1:
        raise ValueError("order must be at least 1")
    out = []
    for j in range(order):
        s = c.u * FixedDec.parse("0.1") if j == 0 else FixedDec(1, 0, 0)
        for i in range(max(j, 1), c.K + 1):
            w = FixedDec.from_units(comb(i, j) * 4**i * (-1) ** (i - j), i)
            s = s + c.nu[i - 1] * w
        a = DecInterval.point(-s)
        if work_scale is not None:
            a = DecInterval.enclose(a.lo.to_fraction(), a.hi.to_fraction(), work_scale)
        out.append(a)
    return out


def from_taylor(a: Sequence[FixedDec]) -> LanfordCoords:
    """Inverse of :func:`to_taylor` for a finite coefficient list ``a_1 ... a_n``.

    With ``h(x) = -sum a_{j+1} x**j`` one has ``h(1 + 2.5 w) = u/10 + sum nu_i w**i``.
    """
    n = len(a)
    b = []
    for i in range(n):
        s = FixedDec(1, 0, 0)
        for j in range(i, n):
            s = s - a[j] * FixedDec.from_units(comb(j, i) * 25**i, i)
        b.append(s)
    return LanfordCoords(b[0] * TEN, tuple(b[1:]))


def eval_psi(
    c: LanfordCoords, z: Scalar, work_scale: int, err: Fraction | None = None
) -> DecInterval:
    """Enclosure of ``psi(z)``; with ``err >= ||psi - g||`` it also encloses ``g(z)``.

    The error term uses ``|w| <= 1``, i.e. ``-1.5 <= z**2 <= 3.5``.
    """
    z2 = i_pow_int(z, 2, work_scale)
    w = i_mul(i_sub(z2, 1), W_INV, work_scale)
    acc = DecInterval.point(0)
    for v in reversed(c.nu):
        acc = i_add(i_mul(acc, w, work_scale), v, work_scale)
    acc = i_add(i_mul(acc, w, work_scale), c.u * FixedDec.parse("0.1"), work_scale)
    out = i_sub(1, i_mul(z2, acc, work_scale), work_scale)
    if err is not None:
        if w.mag() > 1:
            raise ValueError("error propagation needs |z**2 - 1| <= 2.5")
        out = widen(out, z2.mag().to_fraction() * Fraction(err), work_scale)
    return out

