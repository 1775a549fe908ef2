"""Command-line front end for the experiment runners.

Exit codes: 0 on success, 2 on configuration errors, 3 when --check is set
and an enabled acceptance check fails.
"""

from __future__ import annotations

import argparse
import json
import sys

from .ratelab import (ConfigError, ExperimentConfig, run_compare_w1,
                      run_optimize, run_partition_stats, run_rate_sweep,
                      run_verify_fourier, write_outputs)

_RUNNERS = {
    "rates": run_rate_sweep,
    "optimize": run_optimize,
    "verify-fourier": run_verify_fourier,
    "compare-w1": run_compare_w1,
    "partition-stats": run_partition_stats,
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="energyquant",
        description="Energy-distance quantization experiments.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, runner in _RUNNERS.items():
        p = sub.add_parser(name, help=runner.__doc__.splitlines()[0].lower())
        p.add_argument("--config", help="TOML experiment configuration")
        p.add_argument("--out", help="output directory (default: [output] dir or 'out')")
        p.add_argument("--seed", type=int, help="override [experiment] seed")
        p.add_argument("--threads", type=int, help="override [experiment] threads")
        p.add_argument("--format", choices=("csv", "ndjson"),
                       help="row output format (default: [output] format or csv)")
        p.add_argument("--svg", action="store_true", help="also write a rate plot")
        p.add_argument("--check", action="store_true",
                       help="exit 3 if the configured acceptance check fails")
    return parser


def _load_config(args):
    cfg = (ExperimentConfig.from_toml(args.config) if args.config
           else ExperimentConfig())
    if args.seed is not None:
        cfg.experiment["seed"] = args.seed
    if args.threads is not None:
        cfg.experiment["threads"] = args.threads
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _load_config(args)
        result = _RUNNERS[args.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    points = None
    if len(result) == 3:
        rows, summary, points = result
    else:
        rows, summary = result

    out_dir = args.out or cfg.output.get("dir", "out")
    fmt = args.format or cfg.output.get("format", "csv")
    svg = args.svg or bool(cfg.output.get("svg", False))
    written = write_outputs(rows, summary, out_dir, args.command.replace("-", "_"),
                            fmt=fmt, svg=svg, points=points)
    print(json.dumps(summary))
    for path in written:
        print(f"wrote {path}", file=sys.stderr)
    if args.check and summary.get("passed") is False:
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
