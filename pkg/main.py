"""
Command-line entry point for the nuclearity laboratory.

Subcommands: build, spectrum, inequalities, content, relaxation, all, print-defaults.
Exit codes: 0 all checks pass, 1 a check failed or a suite errored,
2 invalid configuration, 3 unwritable output directory.
"""
import argparse
import logging
import os
import sys
from typing import Dict, List, Optional

from dotenv import load_dotenv

from core.config import RunConfig, load_config
from core.errors import ConfigError, ReportError
from suites.orchestrator import SUITE_CHOICES, Orchestrator, outcome_passed
from tools.report_writer import emit_report

logger = logging.getLogger(__name__)

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_CONFIG = 2
EXIT_OUTPUT = 3

LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")


def print_separator():
    """Print a visual separator."""
    print("\n" + "=" * 80 + "\n")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nuclab",
        description="Numerical checks of the nuclearity bound for the massive free scalar field.",
    )
    parser.add_argument("--log-level", choices=LOG_LEVELS, default=None,
                        help="root log level (default WARNING, or NUCLAB_LOG_LEVEL)")
    subparsers = parser.add_subparsers(dest="command", required=True)

    for name in SUITE_CHOICES:
        sub = subparsers.add_parser(name, help=f"run the {name} checks")
        sub.add_argument("--config", default=None, help="KEY=value configuration file")
        sub.add_argument("--seed", type=int, default=None, help="random seed")
        sub.add_argument("--out", default=None, help="output directory")
        sub.add_argument("--tol-scale", type=float, default=None, help="multiplier on every tolerance")

    defaults = subparsers.add_parser("print-defaults", help="print the embedded default configuration")
    defaults.add_argument("--config", default=None, help="render this file merged over the defaults instead")
    return parser


def configure_logging(level: Optional[str]) -> None:
    name = (level or os.getenv("NUCLAB_LOG_LEVEL") or "WARNING").upper()
    if name not in LOG_LEVELS:
        name = "WARNING"
    logging.basicConfig(level=getattr(logging, name),
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")


def print_status(outcome: Dict, passed: bool, out_dir: str) -> None:
    """Print the status table for a finished run."""
    print_separator()
    print(f"🔬 Suite: {outcome['suite']}")
    print_separator()
    for report in outcome["reports"]:
        mark = "✅" if report.passed else "❌"
        print(f"{mark} {report.name:<48} margin {report.margin:.4g}")
    for scan in outcome["scans"]:
        mark = "✅" if scan.passed else "❌"
        print(f"{mark} {scan.name:<48} {len(scan.grid)} points")
    if not outcome["scans"]:
        print("ℹ️  0 scans")
    for error in outcome["errors"]:
        print(f"⚠️  {error['suite']}/{error['task']}: {error['error_type']}: {error['message']}")
    print_separator()
    print(f"{'✅ PASS' if passed else '❌ FAIL'}  (report written to {out_dir})")


def run(args: argparse.Namespace) -> int:
    """Execute one parsed command and return the exit code."""
    if args.command == "print-defaults":
        try:
            config = load_config(args.config, environ={}) if args.config else RunConfig()
        except ConfigError as exc:
            print(f"❌ Invalid configuration: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        sys.stdout.write(config.to_env_text())
        return EXIT_PASS

    overrides = {"seed": args.seed, "output_dir": args.out, "tol_scale": args.tol_scale}
    try:
        config = load_config(args.config, overrides=overrides)
    except ConfigError as exc:
        print(f"❌ Invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    logger.info("Running %s with seed %d", args.command, config.seed)
    outcome = Orchestrator(config, args.command).process()
    passed = outcome_passed(outcome)

    try:
        emit_report(outcome, config, passed)
    except ReportError as exc:
        print(f"❌ Cannot write report: {exc}", file=sys.stderr)
        return EXIT_OUTPUT

    print_status(outcome, passed, config.output_dir)
    return EXIT_PASS if passed else EXIT_FAIL


def main(argv: Optional[List[str]] = None) -> int:
    load_dotenv()
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level)
    return run(args)


if __name__ == "__main__":
    sys.exit(main())
