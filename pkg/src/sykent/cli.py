"""Command-line entry point: ``sykent {run,oracle,counts} CONFIG``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Sequence

from .experiment import (
    ConfigError,
    emit_results,
    gate_count_report,
    load_config,
    oracle_csv,
    oracle_curves,
    run_experiment,
    with_overrides,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3
EXIT_IO = 4

log = logging.getLogger("sykent")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sykent", description="SYK entanglement-entropy experiments")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in (
        ("run", "full experiment: protocols, oracle columns, gate counts"),
        ("oracle", "exact and exact-Trotterized entropy curves only"),
        ("counts", "gate-count report only"),
    ):
        p = sub.add_parser(name, help=text)
        p.add_argument("config", type=Path, help="JSON experiment config")
        p.add_argument("--seed", type=int, default=None, help="override master_seed")
        p.add_argument("--output-dir", default=None, help="override output_dir")
        p.add_argument("--workers", type=int, default=None, help="override executor.worker_count")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def _fail(category: str, message: str, code: int) -> int:
    print(f"sykent: {category} error: {message}", file=sys.stderr)
    return code


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        config = with_overrides(load_config(args.config), args.seed, args.output_dir, args.workers)
    except ConfigError as exc:
        return _fail("config", str(exc), EXIT_CONFIG)
    except ValueError as exc:
        return _fail("config", f"{args.config}: {exc}", EXIT_CONFIG)
    except OSError as exc:
        return _fail("io", f"{args.config}: {exc.strerror or exc}", EXIT_IO)

    out = Path(config.output_dir)
    try:
        if args.command == "run":
            log.info("running %d time points", len(config.times))
            paths = emit_results(run_experiment(config), out)
        elif args.command == "oracle":
            out.mkdir(parents=True, exist_ok=True)
            path = out / "oracle.csv"
            path.write_text(oracle_csv(oracle_curves(config)))
            paths = {"oracle": path}
        else:
            out.mkdir(parents=True, exist_ok=True)
            path = out / "gate_counts.json"
            path.write_text(json.dumps(gate_count_report(config), indent=2, sort_keys=True) + "\n")
            paths = {"gate_counts": path}
    except OSError as exc:
        return _fail("io", str(exc), EXIT_IO)
    except Exception as exc:  # noqa: BLE001 - surfaced as a runtime failure
        log.debug("runtime failure", exc_info=True)
        return _fail("runtime", f"{type(exc).__name__}: {exc}", EXIT_RUNTIME)
    for name, path in paths.items():
        print(f"{name}: {path}")
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
