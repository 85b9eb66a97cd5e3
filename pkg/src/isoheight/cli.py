"""Command-line entry point.

Exit codes: 0 success, 2 certificate violation, 3 bad config, 4 I/O failure.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

from .errors import CertificateViolation
from .lab import (
    EXPERIMENTS,
    ConfigError,
    ExperimentConfig,
    fit_exponent,
    load_config_file,
    parse_sizes,
    read_csv,
    records_to_csv,
    run_experiment,
)
from .siegel import PRECISION_ENV

EXIT_OK, EXIT_CERT, EXIT_CONFIG, EXIT_IO = 0, 2, 3, 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="isoheight", description="Height-bound experiments for isogenies and symplectic bases.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in EXPERIMENTS:
        s = sub.add_parser(name, help=f"run the {name} experiment")
        s.add_argument("--config", help="JSON config file; flags override it")
        s.add_argument("--g", type=int)
        s.add_argument("--trials", type=int)
        s.add_argument("--seed", type=int)
        s.add_argument("--sizes", help="comma-separated, increasing (e.g. 10,100,1000)")
        s.add_argument("--precision-bits", type=int,
                       help=f"mpmath precision (default: ${PRECISION_ENV} or 128)")
        s.add_argument("--out", help="CSV path (default: stdout)")
        s.add_argument("--ring", help='ring descriptor, e.g. \'{"kind":"quadratic","D":8}\'')
        s.add_argument("--workers", type=int)
        s.add_argument("--timing", action="store_true", default=None,
                       help="fill wall_time_ms (makes output non-reproducible)")
    f = sub.add_parser("fit", help="fit the height exponent from a CSV")
    f.add_argument("csv", help="CSV written by one of the experiment commands")
    return p


def _config_from_args(args) -> ExperimentConfig:
    data = {}
    if args.config:
        data.update(load_config_file(args.config))
        for alias, key in (("sizes", "size_schedule"), ("out", "out_path")):
            if alias in data:
                data[key] = data.pop(alias)
    data["experiment"] = args.command
    overrides = {
        "g": args.g, "trials": args.trials, "seed": args.seed,
        "precision_bits": args.precision_bits, "out_path": args.out,
        "ring": args.ring, "workers": args.workers, "timing": args.timing,
    }
    if args.sizes is not None:
        overrides["size_schedule"] = parse_sizes(args.sizes)
    for k, v in overrides.items():
        if v is not None:
            data[k] = v
    if isinstance(data.get("ring"), str):
        try:
            data["ring"] = json.loads(data["ring"])
        except json.JSONDecodeError as exc:
            raise ConfigError(f"--ring is not valid JSON: {exc}") from exc
    return ExperimentConfig.from_dict(data)


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_CONFIG
    if args.command == "fit":
        try:
            records = read_csv(args.csv)
        except OSError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_IO
        except ValueError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        try:
            slope, intercept = fit_exponent(records)
        except ValueError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        print(f"slope={slope:.6f} intercept={intercept:.6f} sizes={len({r.size for r in records})}")
        return EXIT_OK

    try:
        cfg = _config_from_args(args)
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error reading config: {exc}", file=sys.stderr)
        return EXIT_IO
    if cfg.out_path:
        parent = os.path.dirname(os.path.abspath(cfg.out_path))
        if not os.path.isdir(parent):
            print(f"error: directory {parent} does not exist", file=sys.stderr)
            return EXIT_IO
    try:
        records = run_experiment(cfg)
    except CertificateViolation as exc:
        print(f"CERTIFICATE VIOLATION: {exc}", file=sys.stderr)
        return EXIT_CERT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    if not cfg.out_path:
        sys.stdout.write(records_to_csv(records))
    worst = max(r.ratio for r in records)
    print(f"{len(records)} trials ok; max observed/certified = {worst:.3e}", file=sys.stderr)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
