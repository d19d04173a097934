"""Command line interface: run and validate experiment configs.

Usage::

    arraydoctor run <config.json> [--seed N] [--out results.csv] [--threads N]
    arraydoctor validate <config.json>

``ARRAYDOCTOR_SEED`` and ``ARRAYDOCTOR_THREADS`` override the seed and
worker count when the flags are absent.  Exit code 0 on success, 2 on
config or I/O errors.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace

from .errors import ConfigError
from .scenarios import parse_config, rows_to_csv, run_scenario


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="arraydoctor",
        description="Blockage fault simulation and diagnosis experiments for planar arrays",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run a scenario config and emit CSV")
    run_p.add_argument("config", help="path to the scenario JSON file")
    run_p.add_argument("--seed", type=int, default=None, help="override the config seed")
    run_p.add_argument("--out", default=None, help="output CSV path (default: stdout)")
    run_p.add_argument("--threads", type=int, default=None, help="worker process count")

    val_p = sub.add_parser("validate", help="validate a scenario config")
    val_p.add_argument("config", help="path to the scenario JSON file")
    return parser


def _load_raw(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise ConfigError(f"config: cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config: invalid JSON in {path}: {exc}") from exc


def _env_int(name: str) -> int | None:
    value = os.environ.get(name)
    if value is None or value == "":
        return None
    try:
        return int(value)
    except ValueError as exc:
        raise ConfigError(f"{name}: expected integer, got {value!r}") from exc


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        raw = _load_raw(args.config)
        cfg = parse_config(raw)
        if args.command == "validate":
            print(f"ok: {cfg.scenario} scenario, seed {cfg.seed}, {cfg.trials} trials")
            return 0

        seed = args.seed if args.seed is not None else _env_int("ARRAYDOCTOR_SEED")
        if seed is not None:
            cfg = replace(cfg, seed=seed)
            raw = dict(raw, seed=seed)
        threads = args.threads if args.threads is not None else _env_int("ARRAYDOCTOR_THREADS")
        threads = max(1, threads) if threads is not None else 1

        header, rows = run_scenario(cfg, raw_cfg=raw, threads=threads)
        text = rows_to_csv(header, rows)
        if args.out is None:
            sys.stdout.write(text)
        else:
            try:
                with open(args.out, "w", encoding="utf-8", newline="") as fh:
                    fh.write(text)
            except OSError as exc:
                print(f"error: cannot write {args.out}: {exc}", file=sys.stderr)
                return 2
        return 0
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
