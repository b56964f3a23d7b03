"""The iteration psi_m -> psi_{m+1} and certified extraction of alpha and Taylor data.

Every state keeps ``10 + m`` coefficients with exactly ``41 + m`` fractional
digits and an exact rational upper bound on ``||psi_m - g||``.  Two ways of
bounding are supported:

``induction``
    the inductive bound ``0.01 * 0.93**m`` and nothing else.

``aposteriori`` (default)
    additionally, whenever ``Phi psi_m`` has been enclosed, the contraction
    bound ``||Phi psi - Phi g|| <= 0.9 ||psi - g||`` on the ball
    ``||psi - psi_0|| < 0.01`` gives

        ||psi_m - g|| <= 10 * (||psi_m - P Phi psi_m|| + tail(K + 1))

    where ``P`` keeps ``u, nu_1 .. nu_K`` and ``tail(k) = 31/4 * (5/13)**k``
    bounds the discarded coefficients of ``g``.  The bound is carried to
    ``psi_{m+1}`` by ``rounding + 0.9 * bound + tail``.  Both ways rest on the
    same two trusted constants (0.9 and the decay of g's coefficients).
"""

from __future__ import annotations

import enum
import hashlib
import logging
import os
from dataclasses import dataclass, replace
from fractions import Fraction
from pathlib import Path
from typing import Callable, Iterable

from .decfix import DOWN, NEAREST, UP, DecInterval, FixedDec, round_div
from .lanford import (
    PSI0,
    LanfordCoords,
    digits_to_bits,
    distance,
    phi_u,
    t_ball,
    to_taylor,
)

log = logging.getLogger(__name__)

BASE_SCALE = 41
BASE_COUNT = 10
LIPSCHITZ = Fraction(9, 10)
BALL_RADIUS = Fraction(1, 100)
PROP2_START = Fraction(1, 100)
PROP2_RATE = Fraction(93, 100)
DECAY_C = Fraction(62, 13)
DECAY_RATIO = Fraction(5, 13)
TAIL_FACTOR = Fraction(31, 4)
_J = Fraction(3669, 1000)
MAX_GUARD = 4096


class CertificationError(RuntimeError):
    """An enclosure could not be made tight enough, or a trusted hypothesis fails."""


class InsufficientPrecision(ValueError):
    """The state's certified bound is too weak for the requested output."""


class CorruptCheckpoint(ValueError):
    pass


class Certificate(str, enum.Enum):
    INDUCTION = "induction"
    APOSTERIORI = "aposteriori"


def prop2_bound(m: int) -> Fraction:
    """``0.01 * 0.93**m`` exactly."""
    return Fraction(93**m, 100 ** (m + 1))


def tail_bound(k: int) -> Fraction:
    """Upper bound on ``sum_{i >= k} |nu_i(g)|``."""
    return TAIL_FACTOR * DECAY_RATIO**k


def decay_bound(i: int) -> Fraction:
    """Upper bound on ``|nu_i(g)|``."""
    return DECAY_C * DECAY_RATIO**i


def ceil_sig(q: Fraction, digits: int = 12) -> Fraction:
    """Smallest decimal with ``digits`` significant digits that is ``>= q``."""
    q = Fraction(q)
    if q <= 0:
        return q
    k = digits - (len(str(q.numerator)) - len(str(q.denominator)))
    if k >= 0:
        return Fraction(-((-q.numerator * 10**k) // q.denominator), 10**k)
    return Fraction(-((-q.numerator) // (q.denominator * 10**-k)) * 10**-k)


def steps_for_precision(n: int) -> int:
    """Least ``m`` with ``0.01 * 0.93**m <= 10**-n``."""
    if n < 1:
        raise ValueError("n must be at least 1")
    m = 0
    lhs, rhs = 10**n, 100  # 93**m * 10**n  vs  100**m * 100
    while lhs > rhs:
        m += 1
        lhs *= 93
        rhs *= 100
    return m


def error_chain_holds(m: int) -> bool:
    """The two auxiliary inequalities closing the induction at step ``m``."""
    rate = PROP2_RATE**m
    rounding = (BASE_COUNT + m + 1) * Fraction(1, 10 ** (BASE_SCALE + m + 1))
    return rounding <= Fraction(1, 10**5) * rate and tail_bound(BASE_COUNT + m + 1) <= Fraction(
        25, 100000
    ) * rate


# ---------------------------------------------------------------------------
# State
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class IterationState:
    m: int
    coords: LanfordCoords
    bound: Fraction  # certified upper bound on ||psi_m - g||

    @property
    def scale(self) -> int:
        return BASE_SCALE + self.m

    def check_property_one(self) -> None:
        vals = self.coords.values()
        if len(vals) != BASE_COUNT + self.m:
            raise CertificationError(f"m={self.m}: {len(vals)} coefficients, expected {BASE_COUNT + self.m}")
        for v in vals:
            if v.scale != self.scale:
                raise CertificationError(f"m={self.m}: coefficient {v} has scale {v.scale}")
            if abs(v) >= 100:
                raise CertificationError(f"m={self.m}: coefficient {v} has more than two integer digits")


def initial_state() -> IterationState:
    return IterationState(0, PSI0, PROP2_START)


@dataclass(frozen=True)
class StepResult:
    state: IterationState  # psi_{m+1}
    residual: Fraction  # upper bound on ||psi_m - P Phi psi_m||
    aposteriori: Fraction  # certified bound on ||psi_m - g|| from the residual
    guard: int


def initial_guard(m: int) -> int:
    return 15 + m // 4


def advance(state: IterationState, mode: Certificate = Certificate.APOSTERIORI) -> StepResult:
    """One Central Step, plus the a-posteriori bound it yields for ``state``."""
    m, c = state.m, state.coords
    K = BASE_COUNT + m  # retained nus after the step
    s = BASE_SCALE + m + 1
    if distance(c, PSI0).to_fraction() >= BALL_RADIUS:
        raise CertificationError(f"m={m}: iterate left the ball ||psi - psi_0|| < 0.01")
    guard = initial_guard(m)
    while True:
        prec = digits_to_bits(s + guard)
        gp = t_ball(c, K, prec)
        # u-coordinate error is 10/3.669 times the radius; keep it under half an ulp
        if gp.rad * 20000 * 10**s <= 3669 << prec:
            break
        log.debug("m=%d: radius too large at guard %d, doubling", m, guard)
        guard *= 2
        if guard > MAX_GUARD:
            raise CertificationError(f"m={m}: enclosure did not tighten with {guard} guard digits")

    den = 1 << prec
    u = c.u.to_fraction()
    u_new = phi_u(u, Fraction(10 * gp.mids[0], den))
    scale_pow = 10**s
    nus = tuple(FixedDec.from_units(round_div(mid * scale_pow, den, NEAREST), s) for mid in gp.mids[1:])
    coords = LanfordCoords(FixedDec.from_fraction(u_new, s, NEAREST), nus)

    # ||psi_m - P Phi psi_m||, enclosed from above
    in_scale = c.u.scale
    in_pow = 10**in_scale
    padded = c.padded(K)
    acc = sum(abs(mid * in_pow - v.units_at(in_scale) * den) for mid, v in zip(gp.mids[1:], padded))
    residual = abs(u_new - u) + Fraction(acc, den * in_pow) + Fraction(gp.rad * 10000, 3669 * den)
    apost = ceil_sig(10 * (residual + tail_bound(K + 1)))

    rounding = Fraction(K + 1, scale_pow)
    bound = prop2_bound(m + 1)
    if mode is Certificate.INDUCTION:
        if not error_chain_holds(m):
            raise CertificationError(f"m={m}: auxiliary error-chain inequality fails")
    else:
        base = min(state.bound, apost)
        bound = min(bound, ceil_sig(rounding + LIPSCHITZ * base + tail_bound(K + 1)))
    nxt = IterationState(m + 1, coords, bound)
    nxt.check_property_one()
    return StepResult(nxt, residual, apost, guard)


def central_step(state: IterationState, mode: Certificate = Certificate.APOSTERIORI) -> IterationState:
    return advance(state, mode).state


def certify(state: IterationState) -> IterationState:
    """``state`` with its bound tightened by one a-posteriori evaluation."""
    res = advance(state, Certificate.APOSTERIORI)
    return replace(state, bound=min(state.bound, res.aposteriori))


def iterate(
    state: IterationState,
    done: Callable[[IterationState], bool],
    mode: Certificate = Certificate.APOSTERIORI,
    on_step: Callable[[IterationState], None] | None = None,
    max_steps: int | None = None,
) -> IterationState:
    """Run Central Steps until ``done`` holds for the current certified state."""
    taken = 0
    while not done(state):
        if max_steps is not None and taken >= max_steps:
            return state
        res = advance(state, mode)
        if mode is Certificate.APOSTERIORI and res.aposteriori < state.bound:
            tightened = replace(state, bound=res.aposteriori)
            if done(tightened):
                return tightened
        state = res.state
        taken += 1
        log.info("m=%d bound=%.3e guard=%d", state.m, float(state.bound), res.guard)
        if on_step is not None:
            on_step(state)
    return state


def run(
    n: int,
    mode: Certificate = Certificate.APOSTERIORI,
    checkpoint: str | os.PathLike | None = None,
    every: int = 25,
    start: IterationState | None = None,
) -> IterationState:
    """Iterate until ``||psi_m - g|| <= 10**-n`` is certified."""
    if n < 1:
        raise ValueError("n must be at least 1")
    target = Fraction(1, 10**n)
    on_step = None
    if checkpoint is not None:

        def on_step(s: IterationState) -> None:
            if every and s.m % every == 0:
                save_checkpoint(s, checkpoint)

    state = iterate(start or initial_state(), lambda s: s.bound <= target, mode, on_step)
    if checkpoint is not None:
        save_checkpoint(state, checkpoint)
    return state


def run_steps(
    steps: int,
    mode: Certificate = Certificate.APOSTERIORI,
    start: IterationState | None = None,
    on_step: Callable[[IterationState], None] | None = None,
) -> IterationState:
    state = start or initial_state()
    for _ in range(steps):
        state = central_step(state, mode)
        if on_step is not None:
            on_step(state)
    return state


# ---------------------------------------------------------------------------
# Extraction
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AlphaResult:
    value: FixedDec
    error_bound: Fraction
    m_used: int

    def enclosure(self) -> tuple[Fraction, Fraction]:
        v = self.value.to_fraction()
        return v - self.error_bound, v + self.error_bound


def alpha(state: IterationState, n: int) -> AlphaResult:
    """``alpha = 1/g(1)`` to ``n`` decimals with a certified bound ``< 10**-n``.

    ``g(1) = 1 - u/10`` so ``|g(1) - psi_m(1)| <= bound/10``.
    """
    g1 = state.coords.lam()
    dg = state.bound / 10
    if abs(g1) <= dg:
        raise InsufficientPrecision("g(1) is not bounded away from zero")
    enclosure_err = dg / (abs(g1) * (abs(g1) - dg))
    # digits are truncated toward zero so that they agree with the leading
    # digits of the expansion whenever the enclosure is narrow enough
    value = FixedDec.from_fraction(1 / g1, n, DOWN if g1 > 0 else UP)
    total = enclosure_err + abs(value.to_fraction() - 1 / g1)
    if total >= Fraction(1, 10**n):
        raise InsufficientPrecision(f"m={state.m}: alpha error bound {float(total):.3e} exceeds 1e-{n}")
    return AlphaResult(value, ceil_sig(total, 3), state.m)


def alpha_ok(n: int) -> Callable[[IterationState], bool]:
    def done(s: IterationState) -> bool:
        try:
            alpha(s, n)
        except InsufficientPrecision:
            return False
        return True

    return done


def compute_alpha(
    n: int, mode: Certificate = Certificate.APOSTERIORI, start: IterationState | None = None
) -> AlphaResult:
    state = iterate(start or initial_state(), alpha_ok(n), mode)
    return alpha(state, n)


@dataclass(frozen=True)
class TaylorCoefficient:
    index: int
    value: FixedDec
    error_bound: Fraction

    def enclosure(self, work_scale: int) -> DecInterval:
        v = self.value.to_fraction()
        return DecInterval.enclose(v - self.error_bound, v + self.error_bound, work_scale)


def taylor(state: IterationState, k: int, n: int) -> list[TaylorCoefficient]:
    """``a_1 .. a_k`` of ``g(z) = 1 + sum a_i z**(2i)``, each within ``10**-n``.

    The map from coordinates to ``a_{j+1}`` has operator norm at most 1
    (``sum_j C(i, j) / 2.5**i = 0.8**i``), so the state bound carries over.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    out = []
    target = Fraction(1, 10**n)
    for j, a in enumerate(to_taylor(state.coords, k), start=1):
        exact = a.lo.to_fraction()
        value = FixedDec.from_fraction(exact, n, NEAREST)
        err = state.bound + abs(value.to_fraction() - exact)
        if err > target:
            raise InsufficientPrecision(f"m={state.m}: a_{j} error bound {float(err):.3e} exceeds 1e-{n}")
        out.append(TaylorCoefficient(j, value, ceil_sig(err, 3)))
    return out


def taylor_ok(k: int, n: int) -> Callable[[IterationState], bool]:
    def done(s: IterationState) -> bool:
        # a-coefficients only need the state bound plus half an ulp of output rounding
        return s.bound <= Fraction(1, 2 * 10**n)

    return done


def compute_taylor(
    k: int, n: int, mode: Certificate = Certificate.APOSTERIORI, start: IterationState | None = None
) -> list[TaylorCoefficient]:
    state = iterate(start or initial_state(), taylor_ok(k, n), mode)
    return taylor(state, k, n)


# ---------------------------------------------------------------------------
# Checkpoints
# ---------------------------------------------------------------------------

CHECKPOINT_MAGIC = "feigcert-checkpoint"
CHECKPOINT_VERSION = 1


def _format_coefficient(v: FixedDec) -> str:
    digits = str(abs(v))
    head, _, tail = digits.partition(".")
    return f"{'-' if v.sign < 0 else '+'}{head.rjust(2, '0')}.{tail}"


def _format_bound(q: Fraction) -> str:
    q = ceil_sig(q, 12)
    exp = 0
    while (q * 10**exp).denominator != 1:
        exp += 1
    return f"{int(q * 10**exp)}e-{exp}"


def _parse_bound(text: str) -> Fraction:
    mant, _, exp = text.partition("e")
    e = int(exp)
    return Fraction(int(mant)) * (Fraction(10) ** e)


def dumps_checkpoint(state: IterationState) -> str:
    vals = state.coords.values()
    lines = [
        f"{CHECKPOINT_MAGIC} {CHECKPOINT_VERSION} m={state.m} scale={state.scale} "
        f"count={len(vals)} bound={_format_bound(state.bound)}"
    ]
    lines += [_format_coefficient(v) for v in vals]
    body = "\n".join(lines) + "\n"
    return body + f"sha256={hashlib.sha256(body.encode()).hexdigest()}\n"


def loads_checkpoint(text: str) -> IterationState:
    lines = text.splitlines()
    if len(lines) < 3 or not lines[-1].startswith("sha256="):
        raise CorruptCheckpoint("missing checksum line")
    body = "\n".join(lines[:-1]) + "\n"
    if hashlib.sha256(body.encode()).hexdigest() != lines[-1][len("sha256=") :]:
        raise CorruptCheckpoint("checksum mismatch")
    head = lines[0].split()
    if len(head) < 2 or head[0] != CHECKPOINT_MAGIC:
        raise CorruptCheckpoint("not a checkpoint file")
    if head[1] != str(CHECKPOINT_VERSION):
        raise CorruptCheckpoint(f"unsupported checkpoint version {head[1]}")
    try:
        fields = dict(item.split("=", 1) for item in head[2:])
        m, scale, count = int(fields["m"]), int(fields["scale"]), int(fields["count"])
        bound = _parse_bound(fields["bound"])
        vals = [FixedDec.parse(x) for x in lines[1:-1]]
    except (KeyError, ValueError) as exc:
        raise CorruptCheckpoint(f"malformed checkpoint: {exc}") from exc
    if len(vals) != count or scale != BASE_SCALE + m:
        raise CorruptCheckpoint("header does not match contents")
    state = IterationState(m, LanfordCoords(vals[0], tuple(vals[1:])), bound)
    try:
        state.check_property_one()
    except CertificationError as exc:
        raise CorruptCheckpoint(str(exc)) from exc
    return state


def save_checkpoint(state: IterationState, path: str | os.PathLike) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(dumps_checkpoint(state))
    os.replace(tmp, path)


def load_checkpoint(path: str | os.PathLike) -> IterationState:
    try:
        text = Path(path).read_text()
    except UnicodeDecodeError as exc:
        raise CorruptCheckpoint("checkpoint is not text") from exc
    return loads_checkpoint(text)


def coefficient_lines(state: IterationState) -> Iterable[str]:
    return (_format_coefficient(v) for v in state.coords.values())
