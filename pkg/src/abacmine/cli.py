"""Command-line interface.

Subcommands: generate, mine, evaluate, tune, report.  Configuration comes
from an optional JSON file (--config); any config field can be overridden
with a flag of the same dotted name, e.g. --mining.k 12 --log.sparsify 0.1.

Exit codes: 0 success, 2 config error, 3 data error, 4 enumeration cap
exceeded.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import (
    AbacError,
    ConfigError,
    DataError,
    LogSizeError,
)
from .pipeline import (
    ExperimentConfig,
    load_config,
    run_evaluate,
    run_generate,
    run_mine,
    run_report,
    run_tune,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_CAP = 4


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="abacmine",
        description="Mine ABAC policies from access logs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file (or a run manifest)")
        p.add_argument("--seed", type=int, help="master seed")
        p.add_argument("--out", help="output directory")

    g = sub.add_parser("generate",
                       help="generate a ground-truth policy and access log")
    common(g)

    m = sub.add_parser("mine", help="mine a policy from a log CSV")
    common(m)
    m.add_argument("log", help="log CSV file")
    m.add_argument("--schema", help="schema or policy JSON describing the log")
    m.add_argument("--discretizer", help="numeric binning spec JSON")

    e = sub.add_parser("evaluate", help="score a policy against a log")
    e.add_argument("policy", help="policy JSON file")
    e.add_argument("log", help="log CSV file")
    e.add_argument("--out", help="output directory")

    t = sub.add_parser("tune", help="grid-search extraction thresholds")
    common(t)
    t.add_argument("log", help="log CSV file")

    r = sub.add_parser("report", help="merge mine manifests into a table")
    r.add_argument("manifests", nargs="+", help="manifest-mine.json files")
    r.add_argument("--out", default="report-table.csv", help="output CSV path")
    return parser


def _config_from_args(args, overrides: list[str]) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    if getattr(args, "out", None):
        cfg.outdir = args.out
    i = 0
    while i < len(overrides):
        item = overrides[i]
        if not item.startswith("--"):
            raise ConfigError(f"unexpected argument {item!r}")
        key = item[2:]
        if "=" in key:
            key, raw = key.split("=", 1)
            i += 1
        else:
            if i + 1 >= len(overrides):
                raise ConfigError(f"flag --{key} needs a value")
            raw = overrides[i + 1]
            i += 2
        cfg.apply_override(key, raw)
    return cfg


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args, overrides = parser.parse_known_args(argv)
    try:
        if args.command == "generate":
            cfg = _config_from_args(args, overrides)
            manifest = run_generate(cfg)
            m = manifest.doc["metrics"]
            print(f"|L| = {m['log_size']}  |L+| = {m['log_positive']}  "
                  f"|L-| = {m['log_negative']}")
            print(f"wrote {manifest.doc['artifacts']['policy']} and "
                  f"{manifest.doc['artifacts']['log']}")
        elif args.command == "mine":
            cfg = _config_from_args(args, overrides)
            manifest = run_mine(cfg, args.log, schema_path=args.schema,
                                discretizer_path=args.discretizer)
            m = manifest.doc["metrics"]
            print(f"k = {m['optimal_k']}  rules = {m['rules_mined']}  "
                  f"F-score = {m['f_score']:.4f}  Q = {m['quality']:.4f}")
            print(f"wrote {manifest.doc['artifacts']['mined']}")
        elif args.command == "evaluate":
            if overrides:
                raise ConfigError(f"unexpected arguments: {overrides}")
            doc = run_evaluate(args.policy, args.log,
                               outdir=Path(args.out) if args.out else None)
            print(json.dumps(doc, indent=2, sort_keys=True))
        elif args.command == "tune":
            cfg = _config_from_args(args, overrides)
            manifest = run_tune(cfg, args.log)
            print(json.dumps(manifest.doc["metrics"]["tuned_thresholds"],
                             sort_keys=True))
        elif args.command == "report":
            if overrides:
                raise ConfigError(f"unexpected arguments: {overrides}")
            print(run_report(args.manifests, args.out), end="")
    except LogSizeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAP
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, AbacError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
