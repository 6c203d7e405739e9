"""Command-line front end.

Subcommands::

    blindqkd bound      sweep the analytic Eve bounds over (eta2, alpha), CSV out
    blindqkd session    run one key-agreement session, JSONL transcript + summary
    blindqkd attack-mc  Monte Carlo PNS Eve scores against the analytic bound

Exit codes: 0 success / verified keys, 2 usage error, 3 I/O error,
4 hash mismatch, 1 aborted session (dead channel).
"""
from __future__ import annotations

import argparse
import contextlib
import csv
import math
import sys
from fractions import Fraction
from typing import Sequence

import numpy as np

from .adversary import pns_ensemble
from .channel import Attack, ChannelConfig
from .estimation import bound
from .protocol import AbortedSession, Mode, run_session, write_transcript

EXIT_OK = 0
EXIT_ABORTED = 1
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_MISMATCH = 4

BOUND_COLUMNS = ["attack", "eta2", "alpha", "i_a2", "i_a3", "i_a4", "i_e"]
MC_COLUMNS = [
    "attack", "eta2", "alpha", "rounds", "seed",
    "i_a2_mc", "i_a3_mc", "i_a4_mc", "round_aggregate_mean",
    "empirical", "analytic", "gap",
]
DEFAULT_ETA2 = "0.4,0.5,2/3,0.9"
DEFAULT_GRID = "0:6:0.05"
ATTACK_CHOICES = [a.value for a in Attack]


class UsageError(Exception):
    pass


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.10g}"
    return str(x)


def parse_real(text: str) -> float:
    """Parse a real number; simple fractions such as ``2/3`` are accepted."""
    try:
        return float(Fraction(text.strip())) if "/" in text else float(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise UsageError(f"not a number: {text!r}") from exc


def parse_eta2_list(text: str) -> list[float]:
    vals = [parse_real(t) for t in text.split(",") if t.strip()]
    if not vals:
        raise UsageError("empty eta2 list")
    for v in vals:
        if not (0.0 < v <= 1.0):
            raise UsageError(f"eta2 must lie in (0, 1], got {v}")
    return sorted(set(vals))


def parse_grid(text: str) -> list[float]:
    """``start:stop:step`` with ``stop`` included when it lands on the grid."""
    parts = text.split(":")
    if len(parts) != 3:
        raise UsageError(f"grid must be start:stop:step, got {text!r}")
    start, stop, step = (parse_real(p) for p in parts)
    if not step > 0 or stop < start or not all(map(math.isfinite, (start, stop, step))):
        raise UsageError(f"invalid grid {text!r}: need step > 0 and stop >= start")
    if start < 0:
        raise UsageError("alpha grid must be nonnegative")
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [round(start + i * step, 12) for i in range(n)]


def bound_rows(attacks: Sequence[str], eta2s: Sequence[float], alphas: Sequence[float]) -> list[dict]:
    rows = [bound(a, e, x).as_row() for a in attacks for e in eta2s for x in alphas]
    rows.sort(key=lambda r: (r["attack"], r["eta2"], r["alpha"]))
    return rows


def write_csv(rows: list[dict], columns: list[str], out) -> None:
    w = csv.writer(out, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([fmt(r[c]) for c in columns])


@contextlib.contextmanager
def _open_out(path: str | None):
    if path is None or path == "-":
        yield sys.stdout
        return
    fh = open(path, "w", encoding="utf-8", newline="")
    try:
        yield fh
    finally:
        fh.close()


def cmd_bound(args) -> int:
    if args.attack is None:
        attacks = ["pns1", "pns2"]
    elif args.attack in ("pns1", "pns2"):
        attacks = [args.attack]
    else:
        raise UsageError(f"bound sweeps only support pns1/pns2, not {args.attack!r}")
    eta2s = parse_eta2_list(args.eta2)
    alphas = parse_grid(args.grid)
    rows = bound_rows(attacks, eta2s, alphas)
    with _open_out(args.out) as fh:
        write_csv(rows, BOUND_COLUMNS, fh)
    return EXIT_OK


def cmd_session(args) -> int:
    eta2 = parse_real(args.eta2)
    if not (0.0 < eta2 <= 1.0):
        raise UsageError(f"eta2 must lie in (0, 1], got {eta2}")
    if args.bits < 1:
        raise UsageError("--bits must be >= 1")
    alpha = None if args.alpha is None else parse_real(args.alpha)
    if alpha is not None and alpha < 0:
        raise UsageError("--alpha must be >= 0")
    try:
        channel = ChannelConfig.from_eta2(eta2, attack=args.attack, seed=args.seed)
        transcript = run_session(
            args.bits, Mode.parse(args.mode), channel, seed=args.seed, alpha=alpha, knows_s=args.knows_s
        )
    except AbortedSession as exc:
        print(f"aborted: {exc}", file=sys.stderr)
        return EXIT_ABORTED
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    if args.out:
        write_transcript(transcript, args.out)
    for key, value in transcript.summary().items():
        print(f"{key}: {fmt(value)}")
    return EXIT_OK if transcript.verified else EXIT_MISMATCH


def cmd_attack_mc(args) -> int:
    if args.attack not in ("pns1", "pns2"):
        raise UsageError("attack-mc supports pns1 and pns2")
    if args.rounds < 1:
        raise UsageError("--rounds must be >= 1")
    eta2, alpha = parse_real(args.eta2), parse_real(args.alpha)
    try:
        ens = pns_ensemble(args.attack, eta2, alpha, args.rounds, np.random.default_rng(args.seed))
        analytic = bound(args.attack, eta2, alpha).i_e
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    m = ens.per_pass_mean
    row = {
        "attack": args.attack, "eta2": eta2, "alpha": alpha, "rounds": args.rounds, "seed": args.seed,
        "i_a2_mc": m[0], "i_a3_mc": m[1], "i_a4_mc": m[2],
        "round_aggregate_mean": ens.round_aggregate_mean,
        "empirical": ens.empirical, "analytic": analytic, "gap": abs(ens.empirical - analytic),
    }
    with _open_out(args.out) as fh:
        write_csv([row], MC_COLUMNS, fh)
    return EXIT_OK


def _u64(text: str) -> int:
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="blindqkd", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bound", help="analytic Eve information bounds over a grid")
    p.add_argument("--attack", choices=ATTACK_CHOICES, default=None, help="pns1 or pns2 (default: both)")
    p.add_argument("--eta2", default=DEFAULT_ETA2, help="comma-separated intensity efficiencies")
    p.add_argument("--grid", default=DEFAULT_GRID, help="alpha grid start:stop:step")
    p.add_argument("--out", default=None, help="CSV path (default: stdout)")
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("session", help="run one key-agreement session")
    p.add_argument("--bits", type=int, default=128)
    p.add_argument("--mode", choices=[m.value for m in Mode], default="basic")
    p.add_argument("--eta2", default="1.0")
    p.add_argument("--alpha", default=None, help="coherent amplitude; omit for single photons")
    p.add_argument("--attack", choices=ATTACK_CHOICES, default="none")
    p.add_argument("--knows-s", action="store_true", help="impersonators know Bob's shuffle bit")
    p.add_argument("--seed", type=_u64, default=0)
    p.add_argument("--out", default=None, help="JSONL transcript path")
    p.set_defaults(func=cmd_session)

    p = sub.add_parser("attack-mc", help="Monte Carlo PNS Eve scores vs the analytic bound")
    p.add_argument("--attack", choices=ATTACK_CHOICES, default="pns1")
    p.add_argument("--eta2", default="0.5")
    p.add_argument("--alpha", default="2.83")
    p.add_argument("--rounds", type=int, default=100_000)
    p.add_argument("--seed", type=_u64, default=0)
    p.add_argument("--out", default=None, help="CSV path (default: stdout)")
    p.set_defaults(func=cmd_attack_mc)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"blindqkd: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"blindqkd: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
