from __future__ import annotations

import random
from fractions import Fraction

import pytest
from oracles import exact_t, random_small_coords

from feigcert.decfix import DecInterval, FixedDec
from feigcert.lanford import (
    PSI0,
    LanfordCoords,
    apply_j,
    apply_phi,
    apply_t,
    apply_t_reference,
    eval_psi,
    from_taylor,
    full_order,
    norm,
    phi_u,
    to_taylor,
)

D = FixedDec.parse


def coords(u, nu=()) -> LanfordCoords:
    return LanfordCoords(D(str(u)), tuple(D(str(v)) for v in nu))


def test_norm_examples():
    assert norm(coords("1", ["0.5", "0.25"])) == D("1.75")
    assert norm(coords("0")) == 0
    assert D("14.52") <= norm(PSI0) <= D("14.53")


def test_apply_j_examples():
    j = apply_j(coords("3.669", ["1"]), 10)
    assert j.u == DecInterval.point(1)
    assert j.nu == (DecInterval.point(-1),)
    z = apply_j(coords("0", ["0"]), 10)
    assert z.u == DecInterval.point(0) and z.nu == (DecInterval.point(0),)


def test_apply_j_norm_identity():
    rng = random.Random(4)
    for _ in range(50):
        c = LanfordCoords.from_fractions(
            Fraction(rng.randint(-9999, 9999), 100), [Fraction(rng.randint(-999, 999), 1000) for _ in range(4)], 3
        )
        expected = abs(c.u.to_fraction()) / Fraction(3669, 1000) + sum(abs(v.to_fraction()) for v in c.nu)
        j = apply_j(c, 30)
        assert j.norm_upper().to_fraction() >= expected
        assert j.norm_upper().to_fraction() - expected <= Fraction(1, 10**29)


def test_apply_t_hand_example():
    c = coords("5")
    for enc in (apply_t(c, 3, 20), apply_t_reference(c, 3, 20)):
        assert enc.u.contains(D("-2.34375"))
        assert enc.nu[0].contains(D("0.0390625"))
        assert enc.contains(Fraction(-75, 32), [Fraction(5, 128), 0, 0])


def test_full_order_matches_exact_degree():
    rng = random.Random(8)
    for _ in range(15):
        u, nu = random_small_coords(rng, 3)
        if nu and nu[-1] == 0:
            continue
        v, mu, degree_z = exact_t(u, nu)
        K0 = len(nu)
        assert degree_z <= (2 * K0 + 2) ** 2
        assert len(mu) <= full_order(K0)


def test_apply_t_contains_exact_composition():
    rng = random.Random(2024)
    for _ in range(20):
        u, nu = random_small_coords(rng, 3)
        v, mu, _ = exact_t(u, nu)
        c = LanfordCoords.from_fractions(u, nu, 6)
        assert c.fractions() == [u] + nu
        K = full_order(len(nu))
        assert apply_t(c, K, 30).contains(v, mu)


def test_reference_route_contains_truncated_composition():
    rng = random.Random(77)
    for _ in range(8):
        u, nu = random_small_coords(rng, 2)
        v, mu, _ = exact_t(u, nu)
        c = LanfordCoords.from_fractions(u, nu, 6)
        assert apply_t_reference(c, 6, 40).contains(v, mu[:6])


def test_routes_agree_on_psi0():
    fast = apply_t(PSI0, 12, 45)
    ref = apply_t_reference(PSI0, 12, 80)
    for a, b in zip(fast.values(), ref.values()):
        assert not (a.hi < b.lo or b.hi < a.lo)
        assert abs(a.mid() - b.mid()) < Fraction(1, 10**35)


def test_phi_u_formula_and_fixed_point():
    rng = random.Random(1)
    for _ in range(20):
        u, nu = random_small_coords(rng, 2)
        v, mu, _ = exact_t(u, nu)
        c = LanfordCoords.from_fractions(u, nu, 6)
        # psi - J(T psi - psi), coordinate by coordinate
        direct_u = u - (v - u) / Fraction(3669, 1000)
        direct_nu = [x - (-(m - x)) for x, m in zip(nu + [0] * len(mu), mu)]
        assert phi_u(u, v) == direct_u
        assert apply_phi(c, full_order(len(nu)), 30).contains(direct_u, direct_nu)
    assert phi_u(Fraction(7), Fraction(7)) == 7


def test_taylor_examples():
    a = to_taylor(coords("10"), 2)
    assert a[0] == DecInterval.point(-1) and a[1] == DecInterval.point(0)
    a = to_taylor(coords("0", ["1"]), 3)
    assert [x.lo for x in a] == [D("0.4"), D("-0.4"), D("0")]


def test_taylor_round_trip():
    rng = random.Random(6)
    for _ in range(30):
        K = rng.randint(0, 6)
        c = LanfordCoords(
            FixedDec.from_units(rng.randint(-(10**6), 10**6), 4),
            tuple(FixedDec.from_units(rng.randint(-(10**6), 10**6), 5) for _ in range(K)),
        )
        a = [x.lo for x in to_taylor(c, K + 1)]
        back = from_taylor(a)
        assert back.fractions() == c.fractions()


def test_eval_psi_examples():
    assert eval_psi(PSI0, 0, 50) == DecInterval.point(1)
    assert eval_psi(coords("10"), 1, 10) == DecInterval.point(0)
    at_one = eval_psi(PSI0, 1, 60)
    assert at_one == DecInterval.point(FixedDec(1, 1, 0) - PSI0.u * D("0.1"))
    assert str(at_one.lo).startswith("-0.3995352802")


def test_eval_psi_error_widening():
    r = eval_psi(PSI0, D("0.5"), 30, Fraction(1, 1000))
    exact = eval_psi(PSI0, D("0.5"), 30)
    assert r.encloses(exact)
    assert r.width().to_fraction() >= Fraction(2, 4000)
    with pytest.raises(ValueError):
        eval_psi(PSI0, 2, 30, Fraction(1, 1000))
