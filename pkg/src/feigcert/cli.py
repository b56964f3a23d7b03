"""Command-line front end.

Exit codes: 0 ok, 1 a verification check failed, 2 usage error,
3 internal certification failure, 4 corrupt or unreadable checkpoint.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Sequence

from . import __version__
from .driver import (
    Certificate,
    CertificationError,
    CorruptCheckpoint,
    IterationState,
    compute_alpha,
    compute_taylor,
    initial_state,
    iterate,
    load_checkpoint,
    save_checkpoint,
)
from .lanford import PSI0_TABLE
from .verify import DEFAULT_SEED, SUITES, run_suite

EXIT_OK = 0
EXIT_VERIFY = 1
EXIT_USAGE = 2
EXIT_CERT = 3
EXIT_CHECKPOINT = 4

SCHEMA = "feigcert/1"
CHECKPOINT_ENV = "FEIGCERT_CHECKPOINT_DIR"
CHECKPOINT_NAME = "feigcert.ckpt"


@dataclass(frozen=True)
class CommandConfig:
    subcommand: str
    digits: int | None = None
    order: int | None = None
    checkpoint: Path | None = None
    fmt: str = "plain"
    verbosity: int = 0
    seed: int = DEFAULT_SEED


def format_bound(q: Fraction, sig: int = 3) -> str:
    """``q`` in scientific notation, rounded up to ``sig`` significant digits."""
    if q <= 0:
        return "0"
    e = 0
    while q >= 10 ** (e + 1):
        e += 1
    while q < Fraction(10) ** e:
        e -= 1
    scaled = q / Fraction(10) ** (e - sig + 1)
    mant = -((-scaled.numerator) // scaled.denominator)
    if mant >= 10**sig:
        mant //= 10
        e += 1
    digits = str(mant)
    return f"{digits[0]}.{digits[1:]}e{e:+03d}"


def _positive(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return v


def _nonnegative(text: str) -> int:
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError("must be non-negative")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="feigcert", description="Certified digits of Feigenbaum's alpha and g.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    fmt = common.add_mutually_exclusive_group()
    fmt.add_argument("--format", choices=("plain", "json"), default=None)
    fmt.add_argument("--json", action="store_true", help="same as --format json")
    common.add_argument("-v", "--verbose", action="count", default=0)
    cert = argparse.ArgumentParser(add_help=False)
    cert.add_argument(
        "--certificate",
        choices=[c.value for c in Certificate],
        default=Certificate.APOSTERIORI.value,
        help="how the error of each iterate is bounded (default: aposteriori)",
    )

    sub = p.add_subparsers(dest="subcommand", required=True, metavar="COMMAND")

    a = sub.add_parser("alpha", parents=[common, cert], help="print alpha = 1/g(1) to n decimals")
    a.add_argument("-n", "--digits", type=_positive, required=True)

    t = sub.add_parser("taylor", parents=[common, cert], help="print a_1..a_k of g(z) = 1 + sum a_i z^(2i)")
    t.add_argument("-k", "--order", type=_positive, required=True)
    t.add_argument("-n", "--digits", type=_positive, required=True)

    v = sub.add_parser("verify", parents=[common], help="run verification checks")
    v.add_argument(
        "--suite",
        action="append",
        choices=("all",) + SUITES,
        help="check group to run; repeatable (default: all)",
    )
    v.add_argument("--seed", type=int, default=DEFAULT_SEED)

    for name, helptext in (("run", "iterate from psi_0"), ("resume", "continue from a checkpoint")):
        r = sub.add_parser(name, parents=[common, cert], help=helptext)
        goal = r.add_mutually_exclusive_group(required=True)
        goal.add_argument("--steps", type=_nonnegative, help="number of steps to take")
        goal.add_argument("-n", "--digits", type=_positive, help="iterate until ||psi - g|| <= 10^-n")
        r.add_argument("--checkpoint", type=Path, help=f"checkpoint file (default: ${CHECKPOINT_ENV}/{CHECKPOINT_NAME})")
        r.add_argument("--every", type=_nonnegative, default=25, help="save every this many steps (0: only at the end)")

    sub.add_parser("constants", parents=[common], help="print the coordinates of psi_0")
    return p


def _checkpoint_path(arg: Path | None) -> Path:
    if arg is not None:
        return arg
    return Path(os.environ.get(CHECKPOINT_ENV, ".")) / CHECKPOINT_NAME


def _emit(cfg: CommandConfig, plain: str, payload: dict) -> None:
    if cfg.fmt == "json":
        print(json.dumps({"schema": SCHEMA, **payload}, indent=2))
    else:
        print(plain)


def _cmd_alpha(cfg: CommandConfig, mode: Certificate) -> int:
    res = compute_alpha(cfg.digits, mode)
    _emit(
        cfg,
        f"{res.value}\nerror bound: {format_bound(res.error_bound)}\nsteps: {res.m_used}",
        {"alpha": str(res.value), "digits": cfg.digits, "error_bound": format_bound(res.error_bound), "m": res.m_used},
    )
    return EXIT_OK


def _cmd_taylor(cfg: CommandConfig, mode: Certificate) -> int:
    coeffs = compute_taylor(cfg.order, cfg.digits, mode)
    plain = "\n".join(f"a_{c.index} = {c.value}  (+/- {format_bound(c.error_bound)})" for c in coeffs)
    payload = {
        "digits": cfg.digits,
        "coefficients": [
            {"i": c.index, "value": str(c.value), "error_bound": format_bound(c.error_bound)} for c in coeffs
        ],
    }
    _emit(cfg, plain, payload)
    return EXIT_OK


def _cmd_verify(cfg: CommandConfig, suites: Sequence[str]) -> int:
    report = run_suite(suites, seed=cfg.seed)
    if cfg.fmt == "json":
        print(report.to_json())
    else:
        print(report.to_table())
        for c in report.failures():
            print(f"FAILED {c.name}: measured {c.as_dict()['measured']} against bound {c.as_dict()['bound']}")
    return EXIT_OK if report.passed else EXIT_VERIFY


def _advance(cfg: CommandConfig, start: IterationState, args: argparse.Namespace, mode: Certificate) -> int:
    path = cfg.checkpoint
    assert path is not None
    every = args.every

    def on_step(s: IterationState) -> None:
        if every and s.m % every == 0:
            save_checkpoint(s, path)

    if args.steps is not None:
        goal = start.m + args.steps
        state = iterate(start, lambda s: s.m >= goal, mode, on_step)
    else:
        target = Fraction(1, 10**args.digits)
        state = iterate(start, lambda s: s.bound <= target, mode, on_step)
    save_checkpoint(state, path)
    _emit(
        cfg,
        f"m = {state.m}\nbound = {format_bound(state.bound)}\ncheckpoint = {path}",
        {"m": state.m, "bound": format_bound(state.bound), "checkpoint": str(path)},
    )
    return EXIT_OK


def _cmd_constants(cfg: CommandConfig) -> int:
    names = ["u"] + [f"nu_{i}" for i in range(1, len(PSI0_TABLE))]
    plain = "\n".join(f"{n:>5} {v}" for n, v in zip(names, PSI0_TABLE))
    _emit(cfg, plain, {"psi0": dict(zip(names, PSI0_TABLE))})
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    cfg = CommandConfig(
        subcommand=args.subcommand,
        digits=getattr(args, "digits", None),
        order=getattr(args, "order", None),
        checkpoint=_checkpoint_path(args.checkpoint) if args.subcommand in ("run", "resume") else None,
        fmt="json" if args.json else (args.format or "plain"),
        verbosity=args.verbose,
        seed=getattr(args, "seed", DEFAULT_SEED),
    )
    logging.basicConfig(
        level=(logging.WARNING, logging.INFO, logging.DEBUG)[min(cfg.verbosity, 2)],
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    mode = Certificate(getattr(args, "certificate", Certificate.APOSTERIORI.value))
    try:
        if cfg.subcommand == "alpha":
            return _cmd_alpha(cfg, mode)
        if cfg.subcommand == "taylor":
            return _cmd_taylor(cfg, mode)
        if cfg.subcommand == "verify":
            return _cmd_verify(cfg, args.suite or ["all"])
        if cfg.subcommand == "run":
            return _advance(cfg, initial_state(), args, mode)
        if cfg.subcommand == "resume":
            assert cfg.checkpoint is not None
            if not cfg.checkpoint.exists():
                parser.error(f"no checkpoint at {cfg.checkpoint}")
            try:
                start = load_checkpoint(cfg.checkpoint)
            except OSError as exc:
                raise CorruptCheckpoint(f"cannot read {cfg.checkpoint}: {exc}") from exc
            return _advance(cfg, start, args, mode)
        return _cmd_constants(cfg)
    except CorruptCheckpoint as exc:
        print(f"feigcert: corrupt checkpoint: {exc}", file=sys.stderr)
        return EXIT_CHECKPOINT
    except CertificationError as exc:
        print(f"feigcert: certification failed: {exc}", file=sys.stderr)
        return EXIT_CERT


if __name__ == "__main__":
    sys.exit(main())
