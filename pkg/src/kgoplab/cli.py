"""Command-line runner.

Usage::

    kgoplab <experiment> [--config PATH] [--out DIR] [--override KEY=VALUE]...
    kgoplab validate [PATH]
    kgoplab replay MANIFEST [--out DIR]
    kgoplab list

Exit codes: 0 pass, 1 usage error or unknown experiment, 2 config error,
3 failed check (or replay mismatch), 4 non-convergence.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Optional, Sequence

from .experiments import (
    EXPERIMENTS,
    ConfigError,
    build_manifest,
    manifest_json,
    params_from_mapping,
    parse_overrides,
    render_csv,
    resolve_params,
    sha256_text,
    validate_config,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_CONFIG = 2
EXIT_CHECK = 3
EXIT_NONCONVERGENCE = 4


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors, which would collide with the config-error code
    def error(self, message):
        raise _UsageError(message)


def thread_count() -> int:
    """Worker cap from ``KGOPLAB_THREADS`` (default 1)."""
    text = os.environ.get("KGOPLAB_THREADS", "1")
    try:
        n = int(text)
    except ValueError as exc:
        raise ConfigError([f"KGOPLAB_THREADS: not an integer: {text!r}"]) from exc
    if n < 1:
        raise ConfigError(["KGOPLAB_THREADS: must be at least 1"])
    return n


def run(
    experiment: str,
    config_path=None,
    out_dir=".",
    overrides: Optional[dict] = None,
    threads: Optional[int] = None,
    raw_config: Optional[dict] = None,
) -> int:
    """Run one experiment, write ``<name>.csv`` and ``<name>.manifest.json``, return the exit code."""
    if experiment not in EXPERIMENTS:
        print(f"unknown experiment {experiment!r}; available: {', '.join(sorted(EXPERIMENTS))}", file=sys.stderr)
        return EXIT_USAGE
    try:
        if raw_config is not None:
            params, raw = params_from_mapping(experiment, raw_config)
        else:
            params, raw = resolve_params(experiment, config_path, overrides)
        workers = thread_count() if threads is None else threads
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcome = EXPERIMENTS[experiment].func(params, pool)
    except ConfigError as exc:
        for err in exc.errors:
            print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    csv_text = render_csv(outcome.header, outcome.rows)
    if not outcome.converged:
        status, code = "nonconvergence", EXIT_NONCONVERGENCE
    elif all(c.passed for c in outcome.checks):
        status, code = "pass", EXIT_OK
    else:
        status, code = "fail", EXIT_CHECK
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_name = f"{experiment}.csv"
    (out / csv_name).write_text(csv_text)
    manifest = build_manifest(experiment, raw, outcome, csv_name, csv_text, status)
    (out / f"{experiment}.manifest.json").write_text(manifest_json(manifest))
    for c in outcome.checks:
        print(f"{'PASS' if c.passed else 'FAIL'} {experiment}.{c.name}: {c.detail}")
    print(f"{experiment}: {status} -> {out / csv_name}")
    return code


def replay(manifest_path, out_dir=".", threads: Optional[int] = None) -> int:
    """Rerun an experiment from its manifest and compare CSV hashes."""
    try:
        manifest = json.loads(Path(manifest_path).read_text())
        name = manifest["experiment"]
        raw = manifest["config"]
        expected = manifest["outputs"]["csv"]["sha256"]
    except (OSError, ValueError, KeyError, TypeError) as exc:
        print(f"config error: cannot read manifest: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    code = run(name, out_dir=out_dir, threads=threads, raw_config=raw)
    if code in (EXIT_USAGE, EXIT_CONFIG):
        return code
    actual = sha256_text((Path(out_dir) / f"{name}.csv").read_text())
    if actual != expected:
        print(f"replay mismatch: {actual} != {expected}", file=sys.stderr)
        return EXIT_CHECK
    print(f"replay identical: sha256 {actual}")
    return code


def _build_parser() -> _Parser:
    parser = _Parser(prog="kgoplab", description="Reproducible experiments on the weighted momentum space.")
    parser.add_argument("command", help="experiment name, or one of: validate, replay, list")
    parser.add_argument("target", nargs="?", help="config path for validate, manifest path for replay")
    parser.add_argument("--config", help="INI config file (shipped defaults if omitted)")
    parser.add_argument("--out", default=".", help="output directory")
    parser.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config key of the experiment's section")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = _build_parser().parse_args(argv)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.command == "list":
        for name in sorted(EXPERIMENTS):
            print(f"{name}: {EXPERIMENTS[name].description}")
        return EXIT_OK
    if args.command == "validate":
        report = validate_config(args.target or args.config)
        print(report)
        return EXIT_OK if report.valid else EXIT_CONFIG
    if args.command == "replay":
        if not args.target:
            print("usage error: replay needs a manifest path", file=sys.stderr)
            return EXIT_USAGE
        try:
            return replay(args.target, args.out)
        except ConfigError as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
    if args.target is not None:
        print("usage error: unexpected positional argument", file=sys.stderr)
        return EXIT_USAGE
    try:
        overrides = parse_overrides(args.override)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return run(args.command, args.config, args.out, overrides)


if __name__ == "__main__":
    sys.exit(main())
