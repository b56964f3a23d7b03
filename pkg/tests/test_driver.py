from __future__ import annotations

from fractions import Fraction

import pytest

from feigcert.decfix import NEAREST, FixedDec
from feigcert.driver import (
    Certificate,
    CorruptCheckpoint,
    IterationState,
    alpha,
    central_step,
    compute_alpha,
    compute_taylor,
    dumps_checkpoint,
    error_chain_holds,
    initial_state,
    load_checkpoint,
    loads_checkpoint,
    prop2_bound,
    run,
    run_steps,
    save_checkpoint,
    steps_for_precision,
    tail_bound,
    taylor,
)
from feigcert.lanford import PSI0, apply_phi, distance

ALPHA = Fraction(-250290787509589282228390287, 10**26)  # leading digits of the converged value


@pytest.fixture(scope="module")
def states():
    out = {0: initial_state()}
    s = out[0]
    for m in range(1, 31):
        s = central_step(s)
        out[m] = s
    return out


@pytest.mark.parametrize("n,m", [(1, 0), (2, 0), (3, 32), (8, 191)])
def test_steps_for_precision(n, m):
    assert steps_for_precision(n) == m
    assert prop2_bound(m) <= Fraction(1, 10**n)
    if m:
        assert prop2_bound(m - 1) > Fraction(1, 10**n)


def test_initial_state():
    s = initial_state()
    assert s.m == 0
    assert str(s.coords.u) == "13.99535280247654509657069657886239000000000"
    assert distance(s.coords, PSI0) == 0
    s.check_property_one()


def test_first_step_shape_and_accuracy(states):
    s1 = states[1]
    assert s1.m == 1 and s1.scale == 42 and len(s1.coords.values()) == 11
    exact = apply_phi(PSI0, 10, 90)
    err = Fraction(0)
    for enc, v in zip(exact.values(), s1.coords.values()):
        err += max(abs(enc.lo.to_fraction() - v.to_fraction()), abs(enc.hi.to_fraction() - v.to_fraction()))
    assert err <= Fraction(11, 10**42)


def test_property_one_and_bounds_along_run(states):
    for m, s in states.items():
        s.check_property_one()
        assert s.bound <= prop2_bound(m)
    assert states[30].bound < Fraction(1, 10**14)


def test_error_chain_inequalities():
    assert all(error_chain_holds(m) for m in range(0, 400))


def test_tail_bound_is_geometric_sum():
    k = 7
    partial = sum(Fraction(62, 13) * Fraction(5, 13) ** i for i in range(k, k + 200))
    assert partial < tail_bound(k)
    assert tail_bound(k) - partial < Fraction(1, 10**80)


def test_restart_is_bit_exact(states):
    s10 = states[10]
    again = central_step(loads_checkpoint(dumps_checkpoint(s10)))
    assert again == states[11]


def test_checkpoint_round_trip(tmp_path, states):
    path = tmp_path / "state.ckpt"
    save_checkpoint(states[7], path)
    text = path.read_text()
    assert load_checkpoint(path) == states[7]
    assert dumps_checkpoint(load_checkpoint(path)) == text


@pytest.mark.parametrize(
    "mangle",
    [
        lambda t: t.replace("+13.", "+14.", 1),
        lambda t: t[: len(t) // 2],
        lambda t: t.replace("feigcert-checkpoint", "something-else"),
        lambda t: "\n".join(t.splitlines()[:-1]) + "\n",
        lambda t: "",
    ],
)
def test_corrupt_checkpoints_are_rejected(mangle, states):
    with pytest.raises(CorruptCheckpoint):
        loads_checkpoint(mangle(dumps_checkpoint(states[3])))


def test_resume_matches_straight_run(states):
    half = run_steps(15)
    resumed = run_steps(15, start=loads_checkpoint(dumps_checkpoint(half)))
    assert resumed == states[30]


def test_run_small_targets():
    assert run(2) == initial_state()
    s = run(30)
    assert s.bound <= Fraction(1, 10**30)
    assert s.m < steps_for_precision(30)


def test_run_with_checkpoint(tmp_path):
    path = tmp_path / "run.ckpt"
    s = run(12, checkpoint=path, every=5)
    assert load_checkpoint(path) == s


@pytest.mark.slow
def test_induction_mode_run_length():
    s = run(8, Certificate.INDUCTION)
    assert s.m == steps_for_precision(8) == 191
    assert s.bound == prop2_bound(191)


def test_alpha_from_psi0_alone():
    s = initial_state()
    raw = 1 / s.coords.lam()
    assert str(FixedDec.from_fraction(raw, 6, NEAREST)) == "-2.502908"
    assert abs(raw - ALPHA) <= Fraction(26, 10**6)
    a = alpha(s, 1)
    assert str(a.value) == "-2.5"
    lo, hi = a.enclosure()
    assert lo <= ALPHA <= hi


def test_alpha_eight_digits():
    a = compute_alpha(8)
    assert str(a.value) == "-2.50290787"
    assert a.error_bound < Fraction(1, 10**8)
    lo, hi = a.enclosure()
    assert lo <= ALPHA <= hi


def test_alpha_agrees_with_longer_run():
    n = 12
    a = compute_alpha(n)
    b = alpha(run(n + 10), n)
    assert abs(a.value.to_fraction() - b.value.to_fraction()) <= Fraction(2, 10**n)


def test_taylor_coefficients():
    coeffs = compute_taylor(3, 10)
    a1 = coeffs[0]
    assert Fraction(-153, 100) <= a1.value.to_fraction() <= Fraction(-152, 100)
    assert str(a1.value) == "-1.5276329970"
    finer = compute_taylor(3, 20)
    for c, f in zip(coeffs, finer):
        assert abs(c.value.to_fraction() - f.value.to_fraction()) <= c.error_bound + f.error_bound


def test_taylor_of_simple_coords():
    s = IterationState(0, PSI0, Fraction(0))
    simple = IterationState(0, type(PSI0)(FixedDec.parse("10"), ()), Fraction(0))
    assert str(taylor(simple, 1, 3)[0].value) == "-1.000"
    assert taylor(s, 2, 5)[0].error_bound <= Fraction(1, 10**5)
