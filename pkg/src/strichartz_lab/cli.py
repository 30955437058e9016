"""Command-line entry point: ``strichartz-lab <command> [options]``.

Exit status: 0 when every verdict passes, 2 when any fails, 1 on usage or
configuration errors.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .exponent_geometry import (ExponentConfig, ExponentPoint, classify, feasible_q_interval,
                                necessary_check)
from .sweep import ConfigError, Experiment, SweepConfig, emit_report, load_config, run_sweep

EXIT_PASS, EXIT_USAGE, EXIT_FAIL = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _formats(s: str) -> list[str]:
    fm = [f.strip().lower() for f in s.split(",") if f.strip()]
    if not fm or set(fm) - {"json", "csv"}:
        raise argparse.ArgumentTypeError("formats are a comma list drawn from json,csv")
    return fm


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--n", type=int, default=None, help="spatial dimension")
    common.add_argument("--config", type=Path, default=None, help="JSON sweep config")
    common.add_argument("--out", type=Path, default=None, help="output directory for reports")
    common.add_argument("--format", type=_formats, default=["json"], help="json,csv")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--jobs", type=int, default=None)

    point = argparse.ArgumentParser(add_help=False)
    point.add_argument("--x", required=True, help="1/r~' as a rational, e.g. 11/20")
    point.add_argument("--y", required=True, help="1/r as a rational")

    p = _Parser(prog="strichartz-lab", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    c = sub.add_parser("check", parents=[common, point], help="necessary conditions and classification")
    c.add_argument("--inv-q", required=True, help="1/q")
    c.add_argument("--inv-qt-prime", required=True, help="1/q~'")
    r = sub.add_parser("region", parents=[common], help="classification raster")
    r.add_argument("--step", default="1/40")
    sub.add_parser("qrange", parents=[common, point], help="admissible range of 1/q~' at a point")
    sub.add_parser("sweep", parents=[common], help="run a sweep config file")
    sub.add_parser("verify", parents=[common], help="dyadic synthesis vs time stepping")
    sub.add_parser("version", help="print the package version")
    return p


def _emit(rep, args) -> int:
    if args.out is not None:
        for path in emit_report(rep, args.out, args.format):
            print(path, file=sys.stderr)
    else:
        sys.stdout.write(rep.dumps())
    return EXIT_PASS if rep.passed else EXIT_FAIL


def _overrides(cfg: SweepConfig, args) -> SweepConfig:
    kw = {}
    if args.seed is not None:
        kw["seed"] = args.seed
    if args.jobs is not None:
        kw["jobs"] = args.jobs
    if args.n is not None and args.n != cfg.n:
        kw["n"] = args.n
    return cfg.replace(**kw) if kw else cfg


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if e.code is not None else EXIT_USAGE
    try:
        return _dispatch(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, ZeroDivisionError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


def _dispatch(args) -> int:
    cmd = args.command
    if cmd == "version":
        print(__version__)
        return EXIT_PASS
    if cmd == "check":
        c = ExponentConfig.of(args.n or 3, args.x, args.y, args.inv_q, args.inv_qt_prime)
        violated = necessary_check(c)
        verdict = classify(c.n, c.point)
        print(json.dumps({"config": c.to_json(), "necessary_violations": violated,
                          **verdict.to_json()}, indent=2, sort_keys=True))
        return EXIT_FAIL if violated else EXIT_PASS
    if cmd == "qrange":
        n = args.n or 3
        iv = feasible_q_interval(n, ExponentPoint(args.x, args.y))
        print(json.dumps({"n": n, **iv.to_json()}, indent=2, sort_keys=True))
        return EXIT_PASS
    if cmd == "region":
        cfg = SweepConfig(Experiment.REGION_SCAN, n=args.n or 3, step=args.step)
        return _emit(run_sweep(cfg), args)
    if cmd == "verify":
        cfg = load_config(args.config) if args.config else SweepConfig(Experiment.DUHAMEL_VERIFY)
        if cfg.experiment is not Experiment.DUHAMEL_VERIFY:
            raise ConfigError("verify expects a DUHAMEL_VERIFY config")
        return _emit(run_sweep(_overrides(cfg, args)), args)
    if cmd == "sweep":
        if args.config is None:
            raise ConfigError("sweep needs --config")
        return _emit(run_sweep(_overrides(load_config(args.config), args)), args)
    raise ConfigError(f"unknown command {cmd}")


if __name__ == "__main__":
    sys.exit(main())
