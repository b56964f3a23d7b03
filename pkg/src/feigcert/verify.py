"""Independent checks on the iteration and on the computed fixed point.

Checks marked ``certified`` rest on outward-rounded enclosures and are
mathematical statements (given the trusted contraction constant and the
coefficient decay of g).  Checks marked ``sampled`` evaluate certified
quantities at finitely many points and prove nothing beyond those points.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence

from .decfix import DecInterval, FixedDec, i_div_scalar, i_mul, i_sub
from .driver import (
    DECAY_C,
    DECAY_RATIO,
    LIPSCHITZ,
    TAIL_FACTOR,
    Certificate,
    IterationState,
    compute_alpha,
    compute_taylor,
    dumps_checkpoint,
    initial_state,
    loads_checkpoint,
    prop2_bound,
    run_steps,
)
from .lanford import PSI0, LanfordCoords, digits_to_bits, distance, eval_psi, full_order, phi_u, t_ball

DEFAULT_SEED = 20240607
LEMMA_BOUND = Fraction(4, 10**6)
PROBE_RADIUS = Fraction(9, 1000)
RESIDUAL_FACTOR = Fraction(7, 100)
RESIDUAL_RATE = Fraction(93, 100)
# |g(x) - Tg(x)| budget per unit of ||psi - g||: both sides move by at most
# (3.669 + 1) times the coordinate error, once for psi and once for T psi.
FE_BUDGET = 2 * (Fraction(3669, 1000) + 1)

CERTIFIED = "certified"
SAMPLED = "sampled"

_J = Fraction(3669, 1000)


@dataclass(frozen=True)
class DecayConstants:
    C: Fraction = DECAY_C
    ratio: Fraction = DECAY_RATIO
    tail_factor: Fraction = TAIL_FACTOR

    def term(self, i: int) -> Fraction:
        return self.C * self.ratio**i

    def tail(self, k: int) -> Fraction:
        """``sum_{i >= k} C * ratio**i``."""
        return self.tail_factor * self.ratio**k

    def identities_hold(self) -> bool:
        geometric = self.C / (1 - self.ratio)
        return self.tail_factor == self.C * Fraction(13, 8) and geometric == self.tail_factor


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    measured: Fraction | None
    bound: Fraction | None
    mode: str = CERTIFIED
    detail: str = ""

    @property
    def margin(self) -> Fraction | None:
        if self.measured is None or self.bound is None:
            return None
        return self.bound - self.measured

    def as_dict(self) -> dict:
        def num(q: Fraction | None) -> str | None:
            return None if q is None else f"{float(q):.6e}"

        return {
            "name": self.name,
            "status": "pass" if self.passed else "fail",
            "measured": num(self.measured),
            "bound": num(self.bound),
            "margin": num(self.margin),
            "mode": self.mode,
            "detail": self.detail,
        }


@dataclass
class VerificationReport:
    checks: list[Check] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, check: Check) -> None:
        self.checks.append(check)

    def merge(self, *others: VerificationReport) -> VerificationReport:
        out = VerificationReport(list(self.checks))
        for o in others:
            out.checks.extend(o.checks)
        out.checks.sort(key=lambda c: c.name)
        return out

    def failures(self) -> list[Check]:
        return [c for c in self.checks if not c.passed]

    def to_json(self) -> str:
        return json.dumps(
            {"schema": "feigcert-report/1", "passed": self.passed, "checks": [c.as_dict() for c in self.checks]},
            indent=2,
        )

    def to_table(self) -> str:
        rows = [("check", "status", "mode", "measured", "bound", "margin")]
        for c in self.checks:
            d = c.as_dict()
            rows.append(
                (c.name, d["status"], c.mode, d["measured"] or "-", d["bound"] or "-", d["margin"] or "-")
            )
        widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
        lines = ["  ".join(cell.ljust(w) for cell, w in zip(r, widths)).rstrip() for r in rows]
        lines.insert(1, "  ".join("-" * w for w in widths))
        for c in self.checks:
            if c.detail and not c.passed:
                lines.append(f"{c.name}: {c.detail}")
        return "\n".join(lines)


# ---------------------------------------------------------------------------
# Images of T and Phi as exact midpoints plus an l1 error
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class _Image:
    u: Fraction
    nu: tuple[int, ...]  # numerators over ``den``
    den: int
    err: Fraction  # l1 bound on the distance to the true image

    def distance_to(self, c: LanfordCoords) -> tuple[Fraction, Fraction]:
        s = c.u.scale
        pow10 = 10**s
        acc = sum(abs(m * pow10 - v.units_at(s) * self.den) for m, v in zip(self.nu, c.padded(len(self.nu))))
        mid = abs(self.u - c.u.to_fraction()) + Fraction(acc, self.den * pow10)
        return max(mid - self.err, Fraction(0)), mid + self.err

    def distance_between(self, other: _Image) -> tuple[Fraction, Fraction]:
        if other.den != self.den or len(other.nu) != len(self.nu):
            raise ValueError("images must share precision and order")
        mid = abs(self.u - other.u) + Fraction(sum(abs(a - b) for a, b in zip(self.nu, other.nu)), self.den)
        err = self.err + other.err
        return max(mid - err, Fraction(0)), mid + err


def _t_image(c: LanfordCoords, K: int, prec: int) -> _Image:
    gp = t_ball(c, K, prec)
    den = 1 << prec
    # the u-coordinate carries weight 10, every nu weight 1
    return _Image(Fraction(10 * gp.mids[0], den), tuple(gp.mids[1:]), den, Fraction(10 * gp.rad, den))


def _phi_image(c: LanfordCoords, K: int, prec: int) -> _Image:
    gp = t_ball(c, K, prec)
    den = 1 << prec
    u = phi_u(c.u.to_fraction(), Fraction(10 * gp.mids[0], den))
    return _Image(u, tuple(gp.mids[1:]), den, Fraction(10 * gp.rad, den) / _J)


def _escalating(
    compute: Callable[[int], tuple[Fraction, Fraction]], rel: Fraction = Fraction(1, 10**6), digits: int = 30
) -> tuple[Fraction, Fraction]:
    """Enclosure ``[lo, hi]`` from ``compute(prec)``, doubling precision until tight."""
    while True:
        lo, hi = compute(digits_to_bits(digits))
        if hi - lo <= rel * hi or digits > 2000:
            return lo, hi
        digits *= 2


# ---------------------------------------------------------------------------
# Checks
# ---------------------------------------------------------------------------


def phi_psi0_distance(K: int | None = None) -> tuple[Fraction, Fraction]:
    """Enclosure of ``||Phi psi_0 - psi_0||``; ``K=None`` keeps every coefficient."""
    order = full_order(PSI0.K) if K is None else K
    return _escalating(lambda prec: _phi_image(PSI0, order, prec).distance_to(PSI0))


def reproduce_phi_psi0_bound() -> VerificationReport:
    report = VerificationReport()
    lo, hi = phi_psi0_distance()
    report.add(
        Check(
            "lemma-phi-psi0",
            hi < LEMMA_BOUND,
            hi,
            LEMMA_BOUND,
            detail=f"||Phi psi_0 - psi_0|| in [{float(lo):.6e}, {float(hi):.6e}], required < 4e-6",
        )
    )
    report.add(Check("lemma-psi0-not-fixed", lo > 0, lo, None, detail="lower endpoint is positive"))
    partial = [phi_psi0_distance(K)[1] for K in (30, 60)]
    spread = abs(partial[0] - partial[1]) + abs(partial[1] - hi)
    report.add(
        Check(
            "lemma-phi-psi0-order-stable",
            spread <= hi / 10**6,
            spread,
            hi / 10**6,
            detail="truncation at 30 and 60 coefficients against the full image",
        )
    )
    return report


def _random_point(rng: random.Random, radius: Fraction, K: int, scale: int) -> LanfordCoords:
    budget = int(radius * 10**scale)
    total = rng.randint(1, budget)
    cuts = sorted(rng.randint(0, total) for _ in range(K))
    parts = [b - a for a, b in zip([0] + cuts, cuts + [total])]
    vals = PSI0.values()
    out = []
    for v, p in zip(vals, parts):
        delta = FixedDec.from_units(p if rng.random() < 0.5 else -p, scale)
        out.append(v + delta)
    return LanfordCoords(out[0], tuple(out[1:]))


def contraction_probe(samples: int = 100, seed: int = DEFAULT_SEED, digits: int = 12) -> VerificationReport:
    """Certified Lipschitz ratios of ``Phi`` for random pairs in the 0.009-ball around ``psi_0``.

    Perturbations live in the coordinates ``u, nu_1 .. nu_9``; both images are
    kept at full degree, so no truncation enters the ratio.
    """
    if samples < 1:
        raise ValueError("samples must be at least 1")
    rng = random.Random(seed)
    order = full_order(PSI0.K)
    prec = digits_to_bits(PSI0.u.scale + 30)
    worst = Fraction(0)
    violations = 0
    done = 0
    while done < samples:
        a = _random_point(rng, PROBE_RADIUS, PSI0.K, digits)
        b = _random_point(rng, PROBE_RADIUS, PSI0.K, digits)
        gap = distance(a, b).to_fraction()
        if gap == 0:
            continue
        _, hi = _phi_image(a, order, prec).distance_between(_phi_image(b, order, prec))
        ratio = hi / gap
        worst = max(worst, ratio)
        violations += ratio > LIPSCHITZ
        done += 1
    return VerificationReport(
        [
            Check(
                "contraction-probe",
                violations == 0,
                worst,
                LIPSCHITZ,
                SAMPLED,
                detail=f"{samples} pairs, seed {seed}, {violations} ratios above 0.9",
            )
        ]
    )


def decay_check(state: IterationState) -> VerificationReport:
    """``|nu_i| <= C * ratio**i + 0.01 * 0.93**m`` for every retained ``i``."""
    dc = DecayConstants()
    slack = prop2_bound(state.m)
    worst_i, worst = 0, None
    ok = True
    for i, v in enumerate(state.coords.nu, start=1):
        lhs = abs(v.to_fraction())
        rhs = dc.term(i) + slack
        ok &= lhs <= rhs
        if worst is None or lhs / rhs > worst[0] / worst[1]:
            worst_i, worst = i, (lhs, rhs)
    assert worst is not None
    return VerificationReport(
        [
            Check(
                "decay-bounds",
                ok,
                worst[0],
                worst[1],
                detail=f"m={state.m}, {state.coords.K} coefficients, tightest at i={worst_i}",
            ),
            Check("decay-constants", dc.identities_hold(), None, None, detail="exact rational identities"),
        ]
    )


def _g(state: IterationState, z, ws: int) -> DecInterval:
    return eval_psi(state.coords, z, ws, state.bound)


def _fe_residual(state: IterationState, x: Fraction, ws: int) -> DecInterval:
    g1 = _g(state, 1, ws)
    inner = _g(state, _g(state, i_mul(g1, DecInterval.enclose(x, x, ws), ws), ws), ws)
    return i_sub(_g(state, DecInterval.enclose(x, x, ws), ws), i_div_scalar(inner, g1, ws), ws)


def functional_equation_residual(
    state: IterationState, points: Sequence[Fraction] | None = None, max_width: Fraction = Fraction(1, 10**10)
) -> VerificationReport:
    """Enclose ``g(x) - g(g(g(1) x)) / g(1)`` at each point; it must contain 0."""
    if points is None:
        points = [Fraction(i, 10) for i in range(11)]
    ws = state.scale + 10
    budget = FE_BUDGET * state.bound
    worst_w = Fraction(0)
    bad = []
    for x in points:
        if not -1 <= x <= 1:
            raise ValueError("points must lie in [-1, 1]")
        r = _fe_residual(state, Fraction(x), ws)
        w = r.width().to_fraction()
        worst_w = max(worst_w, w)
        if not (r.contains_zero() and r.mag().to_fraction() <= budget + w and w < max_width):
            bad.append(x)
    return VerificationReport(
        [
            Check(
                "functional-equation",
                not bad,
                worst_w,
                max_width,
                detail=f"{len(points)} points, budget {float(budget):.3e}"
                + (f", failing at {[str(x) for x in bad]}" if bad else ""),
            )
        ]
    )


def d_membership(state: IterationState, grid: int = 50) -> VerificationReport:
    ws = state.scale + 10
    g1 = _g(state, 1, ws)
    g2 = _g(state, g1, ws)
    g3 = _g(state, g2, ws)
    lo1, hi1 = g1.lo.to_fraction(), g1.hi.to_fraction()
    m1 = -hi1  # 0 < -g(1)
    m2 = g2.lo.to_fraction() + lo1  # -g(1) < g(g(1))
    m3 = -hi1 - g3.hi.to_fraction()  # g(g(g(1))) <= -g(1)
    report = VerificationReport(
        [
            Check("d-neg-g1-positive", m1 > 0, -m1, Fraction(0), detail=f"g(1) in [{float(lo1):.10f}, {float(hi1):.10f}]"),
            Check("d-g1-below-g2", m2 > 0, -m2, Fraction(0), detail="-g(1) < g(g(1))"),
            Check("d-g3-below-g1", m3 >= 0, -m3, Fraction(0), detail="g(g(g(1))) <= -g(1)"),
        ]
    )
    g0 = eval_psi(state.coords, 0, ws)
    report.add(Check("d-g0-is-one", g0.lo == g0.hi == 1, None, None, detail="evenness and g(0)=1 are built in"))
    xs = [Fraction(i, grid) for i in range(grid + 1)]
    vals = [_g(state, DecInterval.enclose(x, x, ws), ws) for x in xs]
    gaps = [a.lo.to_fraction() - b.hi.to_fraction() for a, b in zip(vals, vals[1:])]
    report.add(
        Check(
            "d-monotone-grid",
            all(gp > 0 for gp in gaps),
            -min(gaps),
            Fraction(0),
            SAMPLED,
            detail=f"g strictly decreasing across {grid + 1} grid points of [0, 1]",
        )
    )
    return report


def self_consistency(n: int = 8, extra: int = 4, k: int = 3) -> VerificationReport:
    a = compute_alpha(n)
    b = compute_alpha(n + extra)
    tol = Fraction(2, 10**n)
    diff = abs(a.value.to_fraction() - b.value.to_fraction())
    ta = compute_taylor(k, n)
    tb = compute_taylor(k, n + extra)
    tdiff = max(abs(x.value.to_fraction() - y.value.to_fraction()) for x, y in zip(ta, tb))
    return VerificationReport(
        [
            Check("consistency-alpha", diff <= tol, diff, tol, detail=f"n={n} against n={n + extra}"),
            Check("consistency-taylor", tdiff <= tol, tdiff, tol, detail=f"a_1..a_{k}, n={n} against n={n + extra}"),
        ]
    )


def resume_determinism(steps: int = 20) -> VerificationReport:
    whole = run_steps(steps)
    half = run_steps(steps // 2)
    resumed = run_steps(steps - steps // 2, start=loads_checkpoint(dumps_checkpoint(half)))
    same = dumps_checkpoint(whole) == dumps_checkpoint(resumed)
    return VerificationReport(
        [Check("consistency-resume", same, None, None, detail=f"{steps} steps against a checkpointed split")]
    )


def tpsi_distance(state: IterationState) -> tuple[Fraction, Fraction]:
    """Enclosure of ``||T psi_m - psi_m||`` with every coefficient of ``T psi_m`` kept."""
    c = state.coords
    order = full_order(c.K)
    return _escalating(lambda prec: _t_image(c, order, prec).distance_to(c), digits=c.u.scale + 10)


def residual_decay(states: Iterable[IterationState]) -> VerificationReport:
    report = VerificationReport()
    for st in states:
        lo, hi = tpsi_distance(st)
        bound = RESIDUAL_FACTOR * RESIDUAL_RATE**st.m
        report.add(
            Check(f"residual-decay-m{st.m:03d}", hi <= bound, hi, bound, detail=f"||T psi_m - psi_m|| at m={st.m}")
        )
    return report


# ---------------------------------------------------------------------------
# Suites
# ---------------------------------------------------------------------------

SUITES = ("lemma", "contraction", "decay", "functional", "membership", "residual", "consistency")


def states_at(ms: Iterable[int]) -> dict[int, IterationState]:
    """Iterates ``psi_m`` for the requested ``m`` (one shared run)."""
    wanted = sorted(set(ms))
    out: dict[int, IterationState] = {}
    state = initial_state()
    if 0 in wanted:
        out[0] = state
    for m in wanted:
        if m > state.m:
            state = run_steps(m - state.m, Certificate.APOSTERIORI, start=state)
        out[m] = state
    return out


def run_suite(names: Sequence[str] = ("all",), seed: int = DEFAULT_SEED, m: int = 50) -> VerificationReport:
    selected = set(SUITES) if "all" in names else set(names)
    unknown = selected - set(SUITES)
    if unknown:
        raise ValueError(f"unknown suite(s): {', '.join(sorted(unknown))}")
    need_states = selected & {"decay", "functional", "membership", "residual"}
    states = states_at({m, 10, 30} if "residual" in selected else {m}) if need_states else {}
    parts = []
    if "lemma" in selected:
        parts.append(reproduce_phi_psi0_bound())
    if "contraction" in selected:
        parts.append(contraction_probe(seed=seed))
    if "decay" in selected:
        parts.append(decay_check(states[m]))
    if "functional" in selected:
        parts.append(functional_equation_residual(states[m]))
    if "membership" in selected:
        parts.append(d_membership(states[m]))
    if "residual" in selected:
        parts.append(residual_decay(states[k] for k in sorted({10, 30, m})))
    if "consistency" in selected:
        parts.append(self_consistency())
        parts.append(resume_determinism())
    return VerificationReport().merge(*parts)

