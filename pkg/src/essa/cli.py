"""Command-line front end.

Commands: ``run`` (PUPE at one Eb/N0), ``minsnr`` (Eb/N0 needed for a target
PUPE), ``sweep`` (one axis, CSV or JSON table) and ``selftest``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys

from essa.channel import delta_e_db
from essa.montecarlo import (AXES, CSV_COLUMNS, BracketError, CodeParams, ScenarioConfig,
                             canonical_axis, estimate_pupe, min_ebn0, sweep)
from essa.phy import PhyParams
from essa.receiver import ReceiverParams

SCHEMA_VERSION = 1

PROFILES = {
    "paper": dict(n=30000, N=1000, K=100, crc_len=11, s=25, L0=3050, W=100, Imax=50,
                  delta=0, list_max=256, genie=False, Ka=25, ebn0_db=3.0),
    "genie": dict(n=30000, N=1000, K=100, crc_len=11, s=25, L0=0, W=100, Imax=50,
                  delta=0, list_max=256, genie=True, Ka=25, ebn0_db=3.0),
    "ci": dict(n=4096, N=128, K=32, crc_len=11, s=8, L0=256, W=8, Imax=10,
               delta=0, list_max=32, genie=False, Ka=4, ebn0_db=6.0),
}


def profile_config(name: str, frames: int = 100, master_seed: int = 0, **overrides) -> ScenarioConfig:
    """Build a ScenarioConfig from a named profile plus flat overrides."""
    v = dict(PROFILES[name])
    v.update(overrides)
    return ScenarioConfig(
        code=CodeParams(N=v["N"], K=v["K"], crc_len=v["crc_len"]),
        phy=PhyParams(n=v["n"], s=v["s"], N=v["N"], L0=v["L0"]),
        Ka=v["Ka"], ebn0_db=float(v["ebn0_db"]),
        rx=ReceiverParams(W=v["W"], Imax=v["Imax"], delta=v["delta"],
                          list_max=v["list_max"], genie=v["genie"]),
        frames=frames, master_seed=master_seed)


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--profile", choices=sorted(PROFILES), default="paper")
    common.add_argument("--n", type=int, help="frame length")
    common.add_argument("--ka", type=int, help="active users")
    common.add_argument("--ebn0-db", type=float)
    common.add_argument("--spreading", type=int, help="spreading factor s")
    common.add_argument("--preamble-len", type=int, help="preamble length L0")
    common.add_argument("--w", type=int, help="candidates per iteration")
    common.add_argument("--imax", type=int, help="maximum SIC iterations")
    common.add_argument("--delta", type=int, help="timing tolerance in samples")
    common.add_argument("--list-max", type=int)
    common.add_argument("--frames", type=int, default=100)
    common.add_argument("--seed", type=int, default=0, help="master seed (ESSA_SEED overrides)")
    common.add_argument("--genie", action="store_true", help="genie-aided detection, no preamble")
    common.add_argument("--target-pupe", type=float, default=0.05)
    common.add_argument("--lo-db", type=float, default=-1.0)
    common.add_argument("--hi-db", type=float, default=6.0)
    common.add_argument("--tol-db", type=float, default=0.05)
    common.add_argument("--out", help="output file (default stdout)")
    common.add_argument("--format", choices=["csv", "json"])
    common.add_argument("--trace", help="JSON-lines attempt trace (run only, single process)")
    common.add_argument("--jobs", type=int, default=os.cpu_count() or 1)

    ap = argparse.ArgumentParser(prog="essa", description="Spread-spectrum Aloha UMAC simulator")
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("run", parents=[common], help="estimate PUPE at one Eb/N0")
    sub.add_parser("minsnr", parents=[common], help="minimum Eb/N0 for the target PUPE")
    sp = sub.add_parser("sweep", parents=[common], help="sweep one parameter")
    sp.add_argument("--axis", required=True,
                    help="one of: " + ", ".join(AXES) + " (or ka, s, l0, w)")
    sp.add_argument("--values", required=True, help="comma-separated values")
    sp.add_argument("--fixed-snr", action="store_true",
                    help="report PUPE at --ebn0-db instead of searching the minimum")
    sub.add_parser("selftest", help="run the built-in invariant checks")
    return ap


def parse_and_validate(argv=None):
    """Parse ``argv`` into ``(args, config)``; invalid input exits with status 2."""
    ap = _parser()
    args = ap.parse_args(argv)
    if args.command == "selftest":
        return args, None
    seed = int(os.environ["ESSA_SEED"]) if os.environ.get("ESSA_SEED") else args.seed
    over = {}
    for flag, key in [("n", "n"), ("ka", "Ka"), ("ebn0_db", "ebn0_db"), ("spreading", "s"),
                      ("preamble_len", "L0"), ("w", "W"), ("imax", "Imax"),
                      ("delta", "delta"), ("list_max", "list_max")]:
        if getattr(args, flag) is not None:
            over[key] = getattr(args, flag)
    if args.genie:
        over["genie"] = True
        over.setdefault("L0", 0)
    try:
        cfg = profile_config(args.profile, frames=args.frames, master_seed=seed, **over)
        if args.command == "sweep":
            args.axis = canonical_axis(args.axis)
            args.values = [int(x) for x in args.values.split(",") if x.strip()]
            if not args.values:
                raise ValueError("--values is empty")
            for v in args.values:
                cfg.replace(**{AXES[args.axis]: v})
    except ValueError as e:
        ap.error(str(e))
    if args.jobs < 1:
        ap.error("--jobs must be >= 1")
    if args.trace and args.command != "run":
        ap.error("--trace is only supported by run")
    if args.format is None:
        args.format = "csv" if args.command == "sweep" else "json"
    return args, cfg


def _csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow([r[c] for c in CSV_COLUMNS])
    return buf.getvalue()


def _report_row(rep, cfg) -> dict:
    d = rep.to_dict()
    row = {c: d.get(c) for c in CSV_COLUMNS}
    row["axis_value"] = ""
    row["delta_e_db"] = delta_e_db(cfg.phy.L0, cfg.phy.L)
    return row


def execute(args, cfg) -> str:
    doc = {"schema_version": SCHEMA_VERSION, "command": args.command, "config": cfg.to_dict()}
    if args.command == "run":
        if args.trace:
            with open(args.trace, "w") as fh:
                rep = estimate_pupe(cfg, 1, trace=fh)
        else:
            rep = estimate_pupe(cfg, args.jobs)
        doc["report"] = rep.to_dict()
        rows = [_report_row(rep, cfg)]
    elif args.command == "minsnr":
        res = min_ebn0(cfg, args.target_pupe, args.lo_db, args.hi_db, args.tol_db, args.jobs)
        doc["target_pupe"] = args.target_pupe
        doc["min_ebn0_db"] = res.ebn0_db
        doc["probes"] = [r.to_dict() for _, r in res.probes]
        rows = [_report_row(r, cfg) for _, r in res.probes]
    else:
        target = None if args.fixed_snr else args.target_pupe
        rows = sweep(args.axis, args.values, cfg, target, args.lo_db, args.hi_db,
                     args.tol_db, args.jobs)
        doc["axis"] = args.axis
        doc["target_pupe"] = target
        doc["rows"] = rows
    if args.format == "json":
        return json.dumps(doc, indent=2) + "\n"
    return _csv(rows)


def main(argv=None) -> int:
    args, cfg = parse_and_validate(argv)
    if args.command == "selftest":
        from essa.selftest import run_selftest

        return 0 if run_selftest(sys.stdout) else 1
    try:
        text = execute(args, cfg)
    except BracketError as e:
        print(f"essa: {e}", file=sys.stderr)
        return 3
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
