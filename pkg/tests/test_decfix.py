from __future__ import annotations

import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import rand_dec, run_containment

from feigcert.decfix import (
    DOWN,
    NEAREST,
    UP,
    DecInterval,
    FixedDec,
    div_round,
    i_add,
    i_div_scalar,
    i_mul,
    i_pow_int,
    mul,
    round_div,
    round_to_scale,
    width,
)

D = FixedDec.parse


def test_add_examples():
    assert str(D("1.25") + D("0.75")) == "2.00"
    x = D("-3.1415")
    assert x + D("0") == x
    assert str(D("0.999") + D("0.001")) == "1.000"


def test_mul_examples():
    assert str(mul(D("0.5"), D("0.5"))) == "0.25"
    x = D("12.0625")
    assert mul(x, D("1")) == x
    assert str(mul(D("-0.3"), D("0.3"))) == "-0.09"


def test_round_to_scale_examples():
    assert str(round_to_scale(D("0.33333"), 4, NEAREST)) == "0.3333"
    assert str(round_to_scale(D("0.00005"), 4, NEAREST)) == "0.0001"
    assert str(round_to_scale(D("-0.00005"), 4, NEAREST)) == "-0.0001"
    assert str(round_to_scale(D("-0.6666"), 2, DOWN)) == "-0.67"
    assert str(round_to_scale(D("-0.6666"), 2, UP)) == "-0.66"


def test_div_round_examples():
    assert str(div_round(D("1"), D("3"), 5, DOWN)) == "0.33333"
    assert str(div_round(D("1"), D("1"), 5, NEAREST)) == "1.00000"


def test_div_round_long_division_oracle():
    # schoolbook long division of 10**7 by 0.39953528
    num, den = 10**7 * 10**8, 39953528
    q, r = divmod(num, den)
    expected = q + (2 * r >= den)
    got = div_round(D("1"), D("0.39953528"), 7, NEAREST)
    assert got.units == expected
    assert str(got) == "2.5029079"


def test_div_by_zero():
    with pytest.raises(ZeroDivisionError):
        div_round(D("1"), D("0.000"), 3)


@pytest.mark.parametrize(
    "num,den,mode,expected",
    [(7, 2, DOWN, 3), (7, 2, UP, 4), (7, 2, NEAREST, 4), (-7, 2, NEAREST, -4), (-7, 2, DOWN, -4), (-7, 2, UP, -3)],
)
def test_round_div(num, den, mode, expected):
    assert round_div(num, den, mode) == expected


def test_parse_and_str_roundtrip():
    for text in ("0.000", "-12.5", "13.99535280247654509657069657886239000000000", "7"):
        assert str(D(text)) == text.lstrip("+")
    assert D("-0.00") == D("0")
    assert D("-0.00").sign == 1


def test_interval_examples():
    one, two = DecInterval.point(1), DecInterval.point(2)
    assert i_add(one, one) == DecInterval.point(2)
    assert i_add(one, two) == DecInterval.point(3)
    x = DecInterval(D("1.414"), D("1.415"))
    sq = i_pow_int(x, 2, 4)
    assert sq.encloses(DecInterval(D("1.999396"), D("2.002225")))
    assert DecInterval(D("1.9993"), D("2.0023")).encloses(sq)
    assert i_mul(DecInterval(D("-3"), D("5")), DecInterval.point(0)) == DecInterval.point(0)
    assert width(DecInterval.point(1)) == 0
    assert width(DecInterval(D("-0.5"), D("0.25"))) == D("0.75")


def test_pow_even_straddling_zero():
    x = DecInterval(D("-2"), D("1"))
    assert i_pow_int(x, 2) == DecInterval(D("0"), D("4"))
    assert i_pow_int(x, 3) == DecInterval(D("-8"), D("1"))
    assert i_pow_int(x, 0) == DecInterval.point(1)


def test_div_scalar_rejects_zero_divisor():
    with pytest.raises(ZeroDivisionError):
        i_div_scalar(DecInterval.point(1), DecInterval(D("-1"), D("1")), 5)


# ---------------------------------------------------------------------------
# randomized containment against exact rationals
# ---------------------------------------------------------------------------


def test_random_containment_small():
    assert run_containment(2000) == 0


def test_width_growth_is_bounded():
    rng = random.Random(7)
    s = 6
    for _ in range(100):
        acc = DecInterval.point(rand_dec(rng).rescale(12))
        n = 0
        for _ in range(10):
            acc = i_mul(acc, DecInterval.point(D("1.0000003")), s)
            acc = i_add(acc, DecInterval.point(D("0.1234567891")), s)
            n += 2
        # the start is a point, so all width comes from outward rounding
        assert width(acc).to_fraction() <= 2 * n * Fraction(1, 10**s)


decs = st.builds(
    lambda u, s: FixedDec.from_units(u, s), st.integers(-(10**15), 10**15), st.integers(0, 10)
)


@settings(max_examples=300, deadline=None)
@given(decs, decs)
def test_exact_ring_ops(a, b):
    fa, fb = a.to_fraction(), b.to_fraction()
    assert (a + b).to_fraction() == fa + fb
    assert (a - b).to_fraction() == fa - fb
    assert (a * b).to_fraction() == fa * fb
    assert (a < b) == (fa < fb)


@settings(max_examples=300, deadline=None)
@given(decs, decs, st.integers(0, 12))
def test_div_round_directed(a, b, s):
    if b.is_zero():
        return
    q = a.to_fraction() / b.to_fraction()
    lo, hi = div_round(a, b, s, DOWN), div_round(a, b, s, UP)
    ulp = Fraction(1, 10**s)
    assert lo.to_fraction() <= q <= hi.to_fraction()
    assert hi.to_fraction() - lo.to_fraction() <= ulp
    near = div_round(a, b, s, NEAREST).to_fraction()
    assert abs(near - q) <= ulp / 2


@settings(max_examples=300, deadline=None)
@given(decs, decs, decs, st.integers(0, 8))
def test_interval_mul_contains_products(a, b, c, s):
    lo, hi = min(a, b), max(a, b)
    x = DecInterval(lo, hi)
    y = DecInterval.point(c)
    r = i_mul(x, y, s)
    for p in (lo, hi):
        assert r.contains(p.to_fraction() * c.to_fraction())
