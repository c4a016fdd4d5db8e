"""Command-line surface.

Subcommands: ``quote`` (price one order against an inline ecosystem),
``sweep`` (CSV curves for sandwich profits and loss fractions), ``toy``
(scripted golden scenarios), ``replay`` (counterfactual repricing of a
logged attack CSV).  Exit codes: 0 success, 1 domain/validation error,
2 usage error.  Machine output (CSV/JSON) is written at full precision and
is byte-deterministic for fixed flags; tables round to two decimals.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from fractions import Fraction
from typing import List, Optional

from . import toy
from .adversary import sandwich_profit_cpmm_closed, sandwich_profit_gmm_closed
from .analytics import il_cpmm, il_gmm_small_pool
from .core import (
    Algorithm,
    DomainError,
    Ecosystem,
    ReserveDepletionError,
    SIDE_X,
    SIDE_Y,
    SwapOrder,
    quote_order,
)
from .rebalance import gmm_rebal_quote, rebalance_pools
from .replay import (
    LogFormatError,
    ScenarioConfig,
    il_portfolio_report,
    parse_log,
    run_counterfactual,
)


def _quiet() -> bool:
    # AMMLAB_QUIET=1 drops informational lines; machine output is unaffected
    return os.environ.get("AMMLAB_QUIET", "") not in ("", "0")


def _parse_pools(text: str) -> Ecosystem:
    pairs = []
    for chunk in text.split(","):
        try:
            x_s, y_s = chunk.split(":")
            pairs.append((Fraction(x_s), Fraction(y_s)))
        except (ValueError, ZeroDivisionError):
            raise DomainError(f"bad pool entry {chunk!r}, expected X:Y") from None
    return Ecosystem.from_reserves(pairs)


def _parse_range(text: str) -> List[Fraction]:
    try:
        lo_s, hi_s, step_s = text.split(":")
        lo, hi, step = Fraction(lo_s), Fraction(hi_s), Fraction(step_s)
    except (ValueError, ZeroDivisionError):
        raise DomainError(f"bad range {text!r}, expected lo:hi:step") from None
    if step <= 0:
        return []
    values = []
    cur = lo
    while cur <= hi:
        values.append(cur)
        cur += step
    return values


def _write_csv(path: Optional[str], header: List[str], rows) -> None:
    out = open(path, "w", newline="") if path else sys.stdout
    try:
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(float(v)) if isinstance(v, (int, float, Fraction)) else v
                             for v in row])
    finally:
        if path:
            out.close()


def cmd_quote(args) -> int:
    eco = _parse_pools(args.pools)
    if not 0 <= args.pool_index < len(eco.pools):
        raise DomainError(f"pool index {args.pool_index} out of range")
    pool_id = eco.pools[args.pool_index].pool_id
    amount = Fraction(args.amount)
    alg = Algorithm.parse(args.algorithm)
    if args.force_trigger and alg is not Algorithm.GMM_REBAL:
        raise DomainError("--force-trigger only applies to gmm-rebal")
    order = SwapOrder(pool_id, args.send, amount)
    if alg is Algorithm.GMM_REBAL:
        work = eco if order.side == SIDE_X else eco.relabeled()
        if amount > 0:
            before = work
            work, quote = gmm_rebal_quote(amount, work, pool_id, force_trigger=args.force_trigger)
            if work is not before and not _quiet():
                _, transfers = rebalance_pools(before, pool_id)
                for t in transfers:
                    print(f"transfer: {t.from_pool} -> {t.to_pool} "
                          f"amount={float(t.amount_x):.2f} received={float(t.amount_y_received):.2f}")
        else:
            quote = quote_order(work, SwapOrder(pool_id, SIDE_X, 0), Algorithm.GMM)
    else:
        quote = quote_order(eco, order, alg)
    print(f"amount_out: {float(quote.amount_out):.2f}")
    print(f"branch: {quote.branch}")
    print(f"classification: {quote.classification}")
    return 0


def cmd_sweep(args) -> int:
    if args.curve == "mev":
        attacks = _parse_range(args.range)
        if not attacks:
            print("error: empty attack range", file=sys.stderr)
            return 2
        xi = Fraction(args.xi)
        victim = Fraction(args.victim)
        alg = Algorithm.parse(args.algorithm)
        if alg is Algorithm.CPMM:
            rows = [(a, sandwich_profit_cpmm_closed(xi, victim, a)) for a in attacks]
        elif alg is Algorithm.GMM:
            if args.x is None:
                print("error: gmm sweep needs --x (global reserve)", file=sys.stderr)
                return 2
            xg = Fraction(args.x)
            rows = [(a, sandwich_profit_gmm_closed(xi, xg, victim, a)) for a in attacks]
        else:
            print(f"error: unsupported sweep algorithm {args.algorithm}", file=sys.stderr)
            return 2
        _write_csv(args.out, ["attack_dx", "profit"], rows)
        return 0

    # curve == "il"
    if args.ratio is not None:
        ratios = [Fraction(args.ratio)]
    elif args.ratio_range is not None:
        ratios = [r for r in _parse_range(args.ratio_range) if r > 0]
    else:
        ratios = []
    if not ratios:
        print("error: empty ratio range", file=sys.stderr)
        return 2
    alpha = Fraction(args.alpha)
    rows = [(r, il_cpmm(1, r) if r != 1 else 0, il_gmm_small_pool(1, r, alpha) if r != 1 else 0)
            for r in ratios]
    _write_csv(args.out, ["ratio", "il_cpmm", "il_gmm"], rows)
    return 0


def cmd_toy(args) -> int:
    alg = Algorithm.parse(args.algorithm) if args.algorithm else None
    checks = toy.run_part(args.part, alg)
    width = max(len(c.name) for c in checks)
    failed = [c for c in checks if not c.ok]
    for c in checks:
        status = "PASS" if c.ok else "FAIL"
        if c.ok and _quiet():
            continue
        print(f"{status}  {c.name.ljust(width)}  expected={c.expected} actual={c.actual}")
    if failed:
        print(f"{len(failed)} of {len(checks)} checks failed", file=sys.stderr)
        return 1
    if not _quiet():
        print(f"all {len(checks)} checks passed")
    return 0


def cmd_replay(args) -> int:
    records = parse_log(args.log)
    if args.il:
        alphas = [Fraction(a) for a in args.alphas.split(",") if a]
        report = il_portfolio_report(records, alphas, Fraction(str(args.lambda_threshold)))
        payload = report.to_json_dict()
    else:
        if args.config is None:
            print("error: --config is required unless --il is given", file=sys.stderr)
            return 2
        with open(args.config, "r", encoding="utf-8") as fh:
            config = ScenarioConfig.from_json(fh.read())
        summary = run_counterfactual(records, config)
        payload = summary.to_json_dict()
        if args.attacks_csv:
            _write_csv(
                args.attacks_csv,
                ["attack_id", "pair_id", "block_number", "token_in", "reserve_in",
                 "attack_dx", "victim_dx", "profit_native", "profit_usd"],
                [
                    (a.attack_id, a.pair_id, a.block_number, a.token_in, a.reserve_in,
                     a.attack_dx, a.victim_dx, a.profit_native,
                     "" if a.profit_usd is None else a.profit_usd)
                    for a in summary.attacks
                ],
            )
    text = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ammlab",
        description="Deterministic simulation and analytics for pooled-liquidity market makers.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    quote = sub.add_parser("quote", help="price one order against an inline ecosystem")
    quote.add_argument("--pools", required=True, help="comma-separated X:Y reserve pairs")
    quote.add_argument("--send", choices=[SIDE_X, SIDE_Y], default=SIDE_X)
    quote.add_argument("--amount", required=True)
    quote.add_argument("--pool-index", type=int, default=0)
    quote.add_argument("--algorithm", default="gmm",
                       choices=["cpmm", "ngmm", "gmm", "gmm-rebal"])
    quote.add_argument("--force-trigger", action="store_true",
                       help="run rebalancing even when its guard conditions fail")
    quote.set_defaults(func=cmd_quote)

    sweep = sub.add_parser("sweep", help="emit CSV curves")
    curves = sweep.add_subparsers(dest="curve", required=True)
    mev = curves.add_parser("mev", help="sandwich profit over attack size")
    mev.add_argument("--xi", required=True, help="pool reserve of the sent asset")
    mev.add_argument("--victim", required=True)
    mev.add_argument("--range", required=True, help="attack sizes lo:hi:step")
    mev.add_argument("--algorithm", default="cpmm", choices=["cpmm", "gmm"])
    mev.add_argument("--x", default=None, help="global reserve (gmm only)")
    mev.add_argument("--out", default=None)
    mev.set_defaults(func=cmd_sweep)
    il = curves.add_parser("il", help="loss fraction over final/initial price ratio")
    il.add_argument("--alpha", default="0.5")
    il.add_argument("--ratio", default=None, help="single price ratio")
    il.add_argument("--ratio-range", default=None, help="ratios lo:hi:step")
    il.add_argument("--out", default=None)
    il.set_defaults(func=cmd_sweep)

    toy_p = sub.add_parser("toy", help="run a scripted golden scenario")
    toy_p.add_argument("--part", type=int, required=True, choices=sorted(toy.PARTS))
    toy_p.add_argument("--algorithm", default=None,
                       help="override the scenario's algorithm (part 5)")
    toy_p.set_defaults(func=cmd_toy)

    replay = sub.add_parser("replay", help="counterfactual repricing of a logged attack CSV")
    replay.add_argument("--log", required=True)
    replay.add_argument("--config", default=None, help="scenario JSON")
    replay.add_argument("--out", default=None, help="summary JSON path (default stdout)")
    replay.add_argument("--il", action="store_true", help="portfolio loss report instead")
    replay.add_argument("--alphas", default="0.01,0.05,0.1,0.25,0.5")
    replay.add_argument("--lambda-threshold", type=float, default=10.0, dest="lambda_threshold")
    replay.add_argument("--attacks-csv", default=None, help="also write per-attack CSV")
    replay.set_defaults(func=cmd_replay)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse uses exit code 2 for usage errors
        return int(exc.code or 0)
    try:
        return args.func(args)
    except LogFormatError as exc:
        print("error: invalid log", file=sys.stderr)
        for line, msg in exc.errors:
            print(f"  line {line}: {msg}", file=sys.stderr)
        return 1
    except (DomainError, ReserveDepletionError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
