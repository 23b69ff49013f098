"""``ogm-lab`` command line: ``run``, ``schedule`` and ``verify``.

Exit codes: 0 clean, 1 configuration or usage error, 2 certificate
violation, divergence or failed acceptance criterion.
"""
from __future__ import annotations

import argparse
import sys
from typing import List, Optional

from ..errors import ConfigError, OgmLabError
from ..schedules import PhiSchedule, ThetaSchedule, estimate_zeta
from .config import load_config
from .runner import STATUS_ERROR, STATUS_OK, run_experiment
from .tables import format_float

EXIT_OK, EXIT_CONFIG, EXIT_VIOLATION = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on bad usage; here that code means a violation."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def cli_run(args) -> int:
    try:
        config = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        results = run_experiment(config, args.out, plots=True if args.plots else None)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    code = EXIT_OK
    for res in results:
        if res.status == STATUS_OK:
            print(f"{res.name}: ok")
            continue
        for msg in res.messages:
            print(msg, file=sys.stderr)
        code = max(code, EXIT_CONFIG if res.status == STATUS_ERROR else EXIT_VIOLATION)
    return code


def cli_schedule(args) -> int:
    out = sys.stdout
    if args.count < 1:
        print("error: --count must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    if args.kind == "zeta":
        try:
            zeta, residual = estimate_zeta(args.count)
        except OgmLabError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        out.write("K,zeta,residual\n")
        out.write(f"{args.count},{format_float(zeta)},{format_float(residual)}\n")
        return EXIT_OK
    theta = ThetaSchedule(args.variant)
    n = args.count - 1
    if args.kind == "theta":
        vals = theta.values(n)
    else:
        vals = PhiSchedule(args.variant, theta).values(n)
    out.write(f"k,{args.kind}\n")
    for k, v in enumerate(vals):
        out.write(f"{k},{format_float(v)}\n")
    return EXIT_OK


def cli_verify(args) -> int:
    from .verify import render, run_suite

    lines = run_suite(quick=args.quick, mutate=args.mutate, replay=not args.no_replay)
    text = render(lines)
    sys.stdout.write(text)
    if args.report:
        try:
            with open(args.report, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
        except OSError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
    return EXIT_OK if all(l.passed for l in lines) else EXIT_VIOLATION


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="ogm-lab", description="Run, certify and benchmark OGM-family methods.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    r = sub.add_parser("run", help="execute the runs of a config file")
    r.add_argument("--config", required=True)
    r.add_argument("--out", default=".")
    r.add_argument("--plots", action="store_true", help="write an SVG per run")
    r.set_defaults(func=cli_run)

    s = sub.add_parser("schedule", help="print theta, phi or the zeta estimate")
    s.add_argument("--kind", required=True, choices=("theta", "phi", "zeta"))
    s.add_argument("--count", required=True, type=int)
    s.add_argument("--variant", default="exact", choices=("exact", "simple"))
    s.set_defaults(func=cli_schedule)

    v = sub.add_parser("verify", help="run the acceptance suite")
    v.add_argument("--quick", action="store_true")
    v.add_argument("--mutate", choices=("theta",), help="corrupt a schedule on purpose")
    v.add_argument("--report", help="also write the report to this file")
    v.add_argument("--no-replay", action="store_true", help="skip the determinism replay")
    v.set_defaults(func=cli_verify)
    return p


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
