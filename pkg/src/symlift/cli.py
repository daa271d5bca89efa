"""Command line entry point: ``symlift verify <scenario>`` and ``symlift list``."""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .scenarios import SCENARIOS, ConfigError, config_from_mapping, list_scenarios, load_config, run

REPORT_DIR_ENV = "SYMLIFT_REPORT_DIR"
DEFAULT_REPORT_DIR = "reports"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="symlift", description="Numerical verification of symplectic lifts.")
    sub = parser.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="run a named verification scenario")
    v.add_argument("scenario")
    v.add_argument("--config", type=Path, help="YAML scenario config")
    v.add_argument("--seed", type=int)
    v.add_argument("--samples", type=int, help="group, base and fiber sample count")
    v.add_argument("--tol", type=float, help="override every check tolerance")
    v.add_argument("--diff", choices=("analytic", "ad", "fd"), help="differentiation strategy")
    v.add_argument("--report", type=Path, help="report path (default: $%s or ./%s)" %
                   (REPORT_DIR_ENV, DEFAULT_REPORT_DIR))
    v.add_argument("--timing", action="store_true", help="record wall time (breaks byte-identity)")
    v.add_argument("--quiet", action="store_true", help="do not print the summary")

    sub.add_parser("list", help="list scenarios")
    return parser


def report_path(cfg, explicit) -> Path:
    if explicit is not None:
        return explicit
    if cfg.output:
        return Path(cfg.output)
    base = Path(os.environ.get(REPORT_DIR_ENV, DEFAULT_REPORT_DIR))
    return base / f"{cfg.scenario}_seed{cfg.seed}.json"


def _verify(args) -> int:
    if args.scenario not in SCENARIOS:
        print(f"error: unknown scenario {args.scenario!r}; try 'symlift list'", file=sys.stderr)
        return 2
    overrides = {"seed": args.seed, "tol": args.tol, "strategy": args.diff}
    if args.samples is not None:
        overrides.update(group_samples=args.samples, base_samples=args.samples, fiber_samples=args.samples)
    try:
        if args.config is not None:
            cfg = load_config(args.config, **overrides)
            if cfg.scenario != args.scenario:
                raise ConfigError(f"config is for scenario {cfg.scenario!r}, not {args.scenario!r}")
        else:
            cfg = config_from_mapping({"scenario": args.scenario}, **overrides)
        report = run(cfg, timing=args.timing)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    path = report_path(cfg, args.report)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(report.to_json(), encoding="utf-8")
    if not args.quiet:
        print(report.summary())
        print(f"report: {path}")
    return report.exit_code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "list":
        for name, desc in list_scenarios():
            print(f"{name:14s} {desc}")
        return 0
    return _verify(args)


if __name__ == "__main__":
    sys.exit(main())
