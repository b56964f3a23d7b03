"""Independent reference computations shared by the test modules."""

from __future__ import annotations

import random
from fractions import Fraction
from typing import Sequence

import sympy as sp

from feigcert.decfix import (
    DecInterval,
    FixedDec,
    i_abs,
    i_add,
    i_div_scalar,
    i_mul,
    i_pow_int,
    i_sub,
)

# ---------------------------------------------------------------------------
# interval containment against exact rationals
# ---------------------------------------------------------------------------


def rand_dec(rng: random.Random) -> FixedDec:
    scale = rng.randint(0, 12)
    return FixedDec.from_units(rng.randint(-(10 ** (scale + 2)), 10 ** (scale + 2)), scale)


def rand_interval(rng: random.Random) -> tuple[DecInterval, Fraction]:
    """A random interval together with a random rational member."""
    a, b = sorted([rand_dec(rng), rand_dec(rng)])
    t = Fraction(rng.randint(0, 1000), 1000)
    return DecInterval(a, b), a.to_fraction() + t * (b.to_fraction() - a.to_fraction())


def containment_trial(rng: random.Random) -> bool:
    """One random operation; the result must contain the exact image of a member."""
    x, p = rand_interval(rng)
    y, q = rand_interval(rng)
    ws = rng.randint(0, 15)
    op = rng.randrange(6)
    if op == 0:
        return i_add(x, y, ws).contains(p + q)
    if op == 1:
        return i_sub(x, y, ws).contains(p - q)
    if op == 2:
        return i_mul(x, y, ws).contains(p * q)
    if op == 3:
        if y.contains_zero():
            return i_div_scalar(x, DecInterval.point(7), ws).contains(p / 7)
        return i_div_scalar(x, y, ws).contains(p / q)
    if op == 4:
        n = rng.randint(0, 5)
        return i_pow_int(x, n, ws).contains(p**n)
    return i_abs(x).contains(abs(p))


def run_containment(trials: int, seed: int = 1) -> int:
    """Number of failed containment trials."""
    rng = random.Random(seed)
    return sum(not containment_trial(rng) for _ in range(trials))


# ---------------------------------------------------------------------------
# brute-force symbolic doubling operator
# ---------------------------------------------------------------------------

_x, _w = sp.symbols("x w")


def _psi_in_x(u: Fraction, nu: Sequence[Fraction]) -> sp.Expr:
    """``psi`` as a polynomial in ``x = z**2``."""
    wexpr = (_x - 1) * sp.Rational(2, 5)
    inner = sp.Rational(u.numerator, u.denominator) / 10
    for i, v in enumerate(nu, start=1):
        inner += sp.Rational(v.numerator, v.denominator) * wexpr**i
    return 1 - _x * inner


def exact_t(u: Fraction, nu: Sequence[Fraction]) -> tuple[Fraction, list[Fraction], int]:
    """``(v, [mu_1, ...], degree in z)`` of ``T psi(z) = psi(psi(lam z)) / lam``.

    The composition is expanded exactly and re-expressed in the ``w`` basis;
    nothing here shares code with the package.
    """
    lam = 1 - Fraction(u) / 10
    lam_s = sp.Rational(lam.numerator, lam.denominator)
    psi = _psi_in_x(Fraction(u), [Fraction(v) for v in nu])
    y = psi.subs(_x, lam_s**2 * _x)
    tpsi = sp.expand(psi.subs(_x, sp.expand(y**2)) / lam_s)
    degree_z = 2 * sp.Poly(tpsi, _x).degree()
    gprime = sp.cancel((1 - tpsi) / _x)
    in_w = sp.Poly(sp.expand(gprime.subs(_x, 1 + sp.Rational(5, 2) * _w)), _w)
    coeffs = [Fraction(int(c.p), int(c.q)) for c in reversed(in_w.all_coeffs())]
    return 10 * coeffs[0], coeffs[1:], degree_z


def random_small_coords(rng: random.Random, kmax: int = 4) -> tuple[Fraction, list[Fraction]]:
    """Rational coordinates with ``K <= kmax`` and ``|psi(1)| >= 0.2``."""
    while True:
        u = Fraction(rng.randint(-200, 200), rng.choice([1, 4, 8, 16, 20]))
        if abs(1 - u / 10) >= Fraction(1, 5):
            break
    K = rng.randint(0, kmax)
    nu = [Fraction(rng.randint(-100, 100), rng.choice([10, 100, 16, 40])) for _ in range(K)]
    return u, nu
