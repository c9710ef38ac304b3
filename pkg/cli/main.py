"""CLI entry point for the D2D collaboration toolkit.

Commands:
  d2d-mf run [--config <path>] [--experiment NAME] [--seed N] [--workers N] [--out DIR]
  d2d-mf validate --config <path>      Check a config file without running anything
  d2d-mf experiments                   List runnable experiment names

Exit codes: 0 success, 1 numerical or infeasible failure, 2 usage or config error.
"""

from __future__ import annotations

import argparse
import logging
import sys

from collaboration.config import apply_overrides, default_config, load_config
from collaboration.harness import EXIT_OK, EXIT_USAGE, run
from collaboration.models import ConfigurationError, Experiment

LOG_FORMAT = "%(asctime)s %(name)s %(levelname)s %(message)s"
LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR")


def _configure_logging(level: str) -> None:
    logging.basicConfig(level=getattr(logging, level), format=LOG_FORMAT, force=True)


def _print_problems(err: ConfigurationError) -> None:
    print("Error: invalid configuration", file=sys.stderr)
    for problem in err.problems:
        print(f"  - {problem}", file=sys.stderr)


def cmd_run(args: argparse.Namespace) -> int:
    """Run one experiment and report where its artifacts went."""
    try:
        config = load_config(args.config) if args.config else default_config()
        config = apply_overrides(
            config,
            experiment=args.experiment,
            seed=args.seed,
            workers=args.workers,
            output_dir=args.out,
        )
    except ConfigurationError as e:
        _print_problems(e)
        return EXIT_USAGE

    outcome = run(config)
    if outcome.run_dir is None:
        print(f"Error: {outcome.message}", file=sys.stderr)
        return outcome.exit_code

    print(f"Experiment: {config.experiment.value}")
    print(f"  Run dir:   {outcome.run_dir}")
    print(f"  Artifacts: {len(outcome.artifacts)}")
    for w in outcome.warnings:
        print(f"  Warning: {w}", file=sys.stderr)
    if outcome.exit_code != EXIT_OK:
        print(f"Error: {outcome.message or 'experiment failed'}", file=sys.stderr)
    return outcome.exit_code


def cmd_validate(args: argparse.Namespace) -> int:
    """Parse and validate a config file."""
    try:
        config = load_config(args.config)
    except ConfigurationError as e:
        _print_problems(e)
        return EXIT_USAGE

    p = config.params
    print(f"Config OK: {args.config}")
    print(f"  Experiment: {config.experiment.value}")
    print(f"  lambda={p.lam} mu={p.mu} gamma={p.gamma} B/r={p.b_over_r:g}")
    print(f"  Degrees:    {list(config.profile.support)} (mean {config.profile.mean_degree:g})")
    print(f"  Seeds:      {len(config.seeds)}")
    for problem in p.problems():
        print(f"  Warning: {problem}", file=sys.stderr)
    return EXIT_USAGE if p.problems() else EXIT_OK


def cmd_experiments(args: argparse.Namespace) -> int:
    for name in Experiment.names():
        print(name)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="d2d-mf",
        description="Mean-field D2D collaboration, offloading and pricing experiments",
    )
    parser.add_argument(
        "--log-level",
        default="WARNING",
        choices=LOG_LEVELS,
        help="Logging level (default: WARNING)",
    )

    subparsers = parser.add_subparsers(dest="command", help="Available commands")

    # --- run ---
    run_parser = subparsers.add_parser("run", help="Run a named experiment")
    run_parser.add_argument("--config", default="", help="Path to a JSON run config (default: built-in)")
    run_parser.add_argument(
        "--experiment", default=None,
        help=f"Experiment name, overrides the config ({', '.join(Experiment.names())})",
    )
    run_parser.add_argument("--seed", type=int, default=None, help="First replication seed")
    run_parser.add_argument("--workers", type=int, default=None, help="Worker processes for replications")
    run_parser.add_argument("--out", default=None, help="Output root (default: $D2D_MF_OUTPUT_DIR or results)")

    # --- validate ---
    validate_parser = subparsers.add_parser("validate", help="Validate a config file")
    validate_parser.add_argument("--config", required=True, help="Path to a JSON run config")

    # --- experiments ---
    subparsers.add_parser("experiments", help="List experiment names")

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code in (0, None) else EXIT_USAGE

    if not args.command:
        parser.print_help()
        return EXIT_OK

    _configure_logging(args.log_level)

    commands = {
        "run": cmd_run,
        "validate": cmd_validate,
        "experiments": cmd_experiments,
    }

    handler = commands.get(args.command)
    if not handler:
        print(f"Unknown command: {args.command}", file=sys.stderr)
        return EXIT_USAGE

    return handler(args)


if __name__ == "__main__":
    sys.exit(main())
