"""Command-line benchmark driver.

    ris-obsmat <subcommand> --config <path> --out <dir> [--seed <u64>] [--trials <n>]

Subcommands: sweep-snr, sweep-q, kernel-training, validate. Each writes one
CSV plus run-meta.json into the output directory. Exit codes: 0 on success,
1 when a validation check fails, 2 on configuration errors.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
import time
from pathlib import Path

from .config import ConfigError, SimConfig, load_config
from .harness import (
    rows_to_csv,
    run_kernel_training,
    run_sweep_q,
    run_sweep_snr,
    training_to_csv,
    write_run_meta,
)
from .validation import format_report, run_validation, validation_to_csv


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ris-obsmat",
        description="Observation-matrix design benchmark for RIS channel estimation",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("sweep-snr", "NMSE versus SNR for the configured schemes"),
        ("sweep-q", "NMSE versus pilot length for the configured schemes"),
        ("kernel-training", "adaptive kernel-training trace"),
        ("validate", "run the oracle identity suite"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", type=Path, default=None,
                       help="TOML configuration file (optional for validate)")
        p.add_argument("--out", type=Path, required=True, help="output directory")
        p.add_argument("--seed", type=int, default=None, help="override the master seed")
        p.add_argument("--trials", type=int, default=None, help="override the trial count")
    return parser


def _load(args) -> SimConfig:
    cfg = load_config(args.config) if args.config is not None else SimConfig()
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.trials is not None:
        overrides["trials"] = args.trials
    if overrides:
        cfg = dataclasses.replace(cfg, **overrides)
    return cfg


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = _load(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()

    if args.command == "validate":
        results = run_validation()
        csv_text = validation_to_csv(results)
        (out_dir / "validate.csv").write_text(csv_text, encoding="utf-8")
        print(format_report(results))
        wall_ms = (time.perf_counter() - t0) * 1e3
        write_run_meta(out_dir, "validate", cfg if args.config is not None else None,
                       wall_ms, ["validate.csv"])
        return 0 if all(r.passed for r in results) else 1

    if args.command == "sweep-snr":
        rows = run_sweep_snr(cfg)
        csv_name = "sweep-snr.csv"
        csv_text = rows_to_csv(rows)
    elif args.command == "sweep-q":
        rows = run_sweep_q(cfg)
        csv_name = "sweep-q.csv"
        csv_text = rows_to_csv(rows)
    else:  # kernel-training
        records = run_kernel_training(cfg)
        csv_name = "kernel-training.csv"
        csv_text = training_to_csv(records)

    (out_dir / csv_name).write_text(csv_text, encoding="utf-8")
    wall_ms = (time.perf_counter() - t0) * 1e3
    write_run_meta(out_dir, args.command, cfg, wall_ms, [csv_name])
    print(f"wrote {out_dir / csv_name} ({wall_ms:.0f} ms)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
