"""Command line entry point ``wsee-bench``."""

from __future__ import annotations

import argparse
import json
import sys

from .bench import SOLVERS, SweepConfig, emit_csv, parse_db_range, read_csv, run_sweep, summarize


def _solvers(text: str) -> list:
    names = [s.strip() for s in text.split(",") if s.strip()]
    bad = [s for s in names if s not in SOLVERS]
    if not names or bad:
        raise argparse.ArgumentTypeError(f"solvers must be drawn from {','.join(SOLVERS)}")
    return names


def _db_range(text: str) -> list:
    try:
        return list(parse_db_range(text))
    except ValueError as err:
        raise argparse.ArgumentTypeError(str(err)) from None


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="wsee-bench",
                                 description="WSEE power control benchmark on the multi-way relay channel")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a P_max sweep and write CSV")
    run.add_argument("--config", required=True, help="JSON file with SweepConfig fields")
    run.add_argument("--out", default="wsee_sweep.csv", help="CSV output path")
    run.add_argument("--solvers", type=_solvers, help="comma separated subset of sca,global")
    run.add_argument("--seed", type=int)
    run.add_argument("--realizations", type=int)
    run.add_argument("--pmax-db", type=_db_range, metavar="A:B:STEP")
    run.add_argument("--workers", type=int)
    run.add_argument("--global-max-pmax-db", type=float,
                     help="largest P_max [dB] at which the global solver runs")
    run.add_argument("--global-time-budget", type=float, metavar="SECONDS",
                     help="wall clock budget per global solve")
    run.add_argument("--global-start", choices=("pmax", "sca"),
                     help="start the global solver at pmax or at the SCA optimum")
    run.add_argument("--cold-start-audit", action="store_true",
                     help="also record SCA started from pmax at every point")
    run.add_argument("--no-timing", action="store_true",
                     help="write wall_ms as 0 so repeated runs give identical files")
    run.add_argument("--quiet", action="store_true", help="no progress line or table")

    summ = sub.add_parser("summarize", help="print the iteration table of a sweep CSV")
    summ.add_argument("csv", help="file written by 'wsee-bench run'")
    return ap


def _config_from_args(args) -> SweepConfig:
    with open(args.config) as fh:
        d = json.load(fh)
    over = {"solvers": args.solvers, "seed": args.seed, "realizations": args.realizations,
            "pmax_db": args.pmax_db, "workers": args.workers,
            "global_max_pmax_db": args.global_max_pmax_db, "global_start": args.global_start}
    d.update({k: v for k, v in over.items() if v is not None})
    if args.global_time_budget is not None:
        d["dinkelbach"] = {**d.get("dinkelbach", {}), "time_budget_s": args.global_time_budget}
    if args.cold_start_audit:
        d["cold_start_audit"] = True
    if args.no_timing:
        d["record_timing"] = False
    return SweepConfig.from_dict(d)


def _join_negative_ranges(argv):
    # argparse takes "-30:30:5" for an option; glue it to its flag
    out = []
    it = iter(argv)
    for tok in it:
        if tok == "--pmax-db":
            nxt = next(it, None)
            tok = tok if nxt is None else f"{tok}={nxt}"
        out.append(tok)
    return out


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    args = build_parser().parse_args(_join_negative_ranges(argv))
    if args.command == "summarize":
        try:
            records = read_csv(args.csv)
        except (OSError, KeyError, ValueError) as err:
            print(f"wsee-bench: {err}", file=sys.stderr)
            return 1
        if not records:
            print(f"wsee-bench: {args.csv} has no records", file=sys.stderr)
            return 1
        print(summarize(records))
        return 0

    try:
        cfg = _config_from_args(args)
    except (OSError, ValueError, TypeError) as err:
        print(f"wsee-bench: bad config: {err}", file=sys.stderr)
        return 2
    result = run_sweep(cfg, progress=not args.quiet)
    try:
        emit_csv(result.records, args.out)
    except (OSError, ValueError) as err:
        print(f"wsee-bench: {err}", file=sys.stderr)
        return 1
    if not args.quiet:
        print(summarize(result.records))
        print(f"wrote {len(result.records)} records to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
