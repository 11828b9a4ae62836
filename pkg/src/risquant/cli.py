"""Command line entry point ``estimate``.

Exit codes: 0 success, 1 failed self-test, 2 configuration error, 3 solver abort.
"""
from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

from .config import ConfigError, load_config
from .vamp import TRACE_COLUMNS, SolverAbort

EXIT_OK = 0
EXIT_SELFTEST = 1
EXIT_CONFIG = 2
EXIT_ABORT = 3


def _cmd_sweep(args) -> int:
    from .harness import median_nmse, run_sweep

    cfg = load_config(args.config)
    if args.workers < 1:
        raise ConfigError("--workers must be >= 1")
    records = run_sweep(cfg, args.out, workers=args.workers, timing=not args.no_timing)
    failed = sum(1 for r in records if r.algo == "vamp" and r.nmse_db != r.nmse_db)
    for (snr, bits), val in sorted(median_nmse(records).items(), key=lambda kv: (kv[0][0], kv[0][1])):
        print(f"snr={snr:g} dB bits={bits}: median VAMP NMSE {val:.2f} dB")
    print(f"wrote {len(records)} records to {args.out}")
    if failed:
        print(f"{failed} VAMP solves aborted (recorded as nan)", file=sys.stderr)
    return EXIT_OK


def _cmd_trace(args) -> int:
    from .harness import single_trace

    cfg = load_config(args.config)
    if not 0 <= args.user < cfg.users or not 0 <= args.trial:
        raise ConfigError(f"trial must be >= 0 and user in [0, {cfg.users})")
    result = single_trace(cfg, trial=args.trial, user=args.user)
    out = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        for rec in result.trace:
            w.writerow([f"{v:.10g}" if isinstance(v, float) else v for v in rec.row()])
    finally:
        if args.out:
            out.close()
    return EXIT_OK


def _cmd_selftest(args) -> int:
    from .selftest import run_all

    ok = True
    for res in run_all():
        print(f"{'PASS' if res.passed else 'FAIL'}  {res.name}: {res.detail}")
        ok &= res.passed
    return EXIT_OK if ok else EXIT_SELFTEST


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="estimate",
                                     description="Quantized RIS cascaded-channel estimation experiments")
    parser.add_argument("-v", "--verbose", action="store_true", help="log solver warnings")
    sub = parser.add_subparsers(dest="command", required=True)

    sw = sub.add_parser("sweep", help="Monte Carlo NMSE sweep over SNR and ADC resolution")
    sw.add_argument("--config", required=True, type=Path)
    sw.add_argument("--out", required=True, type=Path)
    sw.add_argument("--workers", type=int, default=1, help="worker processes (trials run in parallel)")
    sw.add_argument("--no-timing", action="store_true",
                    help="leave the seconds column empty so repeated runs are byte-identical")
    sw.set_defaults(func=_cmd_sweep)

    tr = sub.add_parser("trace", help="per-iteration trace of one solve (first snr and bits)")
    tr.add_argument("--config", required=True, type=Path)
    tr.add_argument("--out", type=Path, default=None, help="CSV path (default: stdout)")
    tr.add_argument("--trial", type=int, default=0)
    tr.add_argument("--user", type=int, default=0)
    tr.set_defaults(func=_cmd_trace)

    st = sub.add_parser("selftest", help="fast paths vs dense / quadrature oracles")
    st.set_defaults(func=_cmd_selftest)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.verbose else logging.ERROR,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverAbort as exc:
        print(f"solver aborted: {exc}", file=sys.stderr)
        return EXIT_ABORT


if __name__ == "__main__":
    sys.exit(main())
