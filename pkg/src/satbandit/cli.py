"""Command-line entry points.

``bandit run`` runs one or more policies on an environment and writes CSVs;
``bandit compare`` drives a multi-policy suite from a key = value config
file with optional ``[policy.NAME]`` sections.
"""

from __future__ import annotations

import argparse
import sys

from .envs import IngestionError
from .harness import (AllRunsFailed, ConfigError, ExperimentConfig,
                      POLICY_NAMES, RELIABILITY_NAMES, build_dataset,
                      run_batch, write_results)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_INGESTION = 2
EXIT_ALL_FAILED = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bandit",
                                     description="Contextual-bandit simulation harness")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one or more policies on an environment")
    run.add_argument("--env", choices=("artificial", "shuttle"), default="artificial")
    run.add_argument("--policy", action="append", choices=POLICY_NAMES,
                     help="repeatable; default neuralrs")
    run.add_argument("--reliability", choices=("knn", "kmeans", "xe", "trial"),
                     default="knn")
    run.add_argument("--steps", type=int, default=10000)
    run.add_argument("--runs", type=int, default=10)
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--aleph", type=float, default=0.65)
    run.add_argument("--shuttle-path", default=None)
    run.add_argument("--out", default="results")
    run.add_argument("--full", action="store_true",
                     help="restore the 100-run experiment scale")
    run.add_argument("--workers", type=int, default=1)

    cmp_ = sub.add_parser("compare", help="run a suite from a config file")
    cmp_.add_argument("--config", required=True)
    return parser


def _cmd_run(args) -> int:
    cfg = ExperimentConfig(
        env=args.env,
        policies=args.policy or ["neuralrs"],
        steps=args.steps,
        runs=100 if args.full else args.runs,
        base_seed=args.seed,
        aleph=args.aleph,
        reliability="trial_ratio" if args.reliability == "trial" else args.reliability,
        shuttle_path=args.shuttle_path,
        out_dir=args.out,
        workers=args.workers,
    )
    return _execute(cfg)


def parse_compare_file(path: str) -> ExperimentConfig:
    """key = value lines; ``[policy.NAME]`` headers open per-policy overrides."""
    base: dict = {}
    policies: list[dict] = []
    current: dict | None = None
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if line.startswith("[") and line.endswith("]"):
                section = line[1:-1].strip()
                if not section.startswith("policy."):
                    raise ConfigError(f"{path}:{lineno}: unknown section [{section}]")
                current = {"name": section[len("policy."):]}
                policies.append(current)
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key = value")
            key, value = (part.strip() for part in line.split("=", 1))
            target = base if current is None else current
            target[key] = _coerce(value)
    if policies:
        base["policies"] = policies
    return ExperimentConfig.from_dict(base)


def _coerce(value: str):
    for cast in (int, float):
        try:
            return cast(value)
        except ValueError:
            pass
    if value.lower() in ("true", "false"):
        return value.lower() == "true"
    return value


def _cmd_compare(args) -> int:
    try:
        cfg = parse_compare_file(args.config)
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return _execute(cfg)


def _execute(cfg: ExperimentConfig) -> int:
    try:
        cfg.validate()
        ds = build_dataset(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except IngestionError as exc:
        print(f"ingestion error: {exc}", file=sys.stderr)
        return EXIT_INGESTION
    try:
        results = run_batch(cfg, ds, log=print)
    except AllRunsFailed as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ALL_FAILED
    for path in write_results(results, cfg, cfg.out_dir):
        print(f"wrote {path}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        return _cmd_compare(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
