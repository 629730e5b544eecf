"""
Command-line front end for the Ruelle Resonance Lab.
"""
import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

from config import APP_NAME, APP_VERSION, COMMANDS, HISTORY_FILE, PRESETS
from config_loader import ConfigLoader
from lab_engine import ResonanceLab
from run_history import RunHistory
from validators import NumericalError, ValidationError

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

LOG_FORMAT = "%(asctime)s %(levelname)-7s %(name)s: %(message)s"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ruelle-lab",
        description=f"{APP_NAME}: Ruelle resonances of partially expanding maps",
    )
    parser.add_argument("--version", action="version", version=f"{APP_NAME} v{APP_VERSION}")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", "-c", help="TOML run file")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override any config key (TOML value syntax), repeatable")
    common.add_argument("--preset", choices=list(PRESETS) + ["custom"], help="map preset")
    common.add_argument("--nu", type=float, nargs="+", help="list of nu values")
    common.add_argument("--truncation", "-N", help="truncation N or 'auto'")
    common.add_argument("--seed", type=int, help="random seed")
    common.add_argument("--workers", type=int, help="parallel workers over nu")
    common.add_argument("--output-dir", "-o", help="directory for data files")
    verbosity = common.add_mutually_exclusive_group()
    verbosity.add_argument("--verbose", "-v", action="store_true", help="debug logging")
    verbosity.add_argument("--quiet", "-q", action="store_true", help="warnings only")

    commands = parser.add_subparsers(dest="command", required=True)
    for name, label in COMMANDS.items():
        sub = commands.add_parser(name, parents=[common], help=label, description=label)
        if name == "history":
            sub.add_argument("--clear", action="store_true", help="delete all recorded runs")
            lookup = sub.add_mutually_exclusive_group()
            lookup.add_argument("--file", help="show the run that wrote this file")
            lookup.add_argument("--id", dest="session_id", help="show one run and its files")
    return parser


def configure_logging(verbose: bool = False, quiet: bool = False):
    level = logging.DEBUG if verbose else logging.WARNING if quiet else logging.INFO
    logging.basicConfig(level=level, format=LOG_FORMAT, force=True)


def load_config(args):
    """RunConfig from the run file, flags, then --set overrides (last wins)."""
    loader = ConfigLoader(args.config)
    if args.preset is not None:
        loader.set_value("preset", args.preset)
    if args.nu is not None:
        loader.set_value("nu", args.nu)
    if args.truncation is not None:
        value = args.truncation
        loader.set_value("truncation", value if value == "auto" else _as_int(value, "truncation"))
    if args.seed is not None:
        loader.set_value("seed", args.seed)
    if args.workers is not None:
        loader.set_value("workers", args.workers)
    if args.output_dir is not None:
        loader.set_value("output_dir", args.output_dir)
    return loader.apply_overrides(args.set)


def _as_int(value, name):
    try:
        return int(value)
    except ValueError:
        raise ValidationError(f"{name} must be 'auto' or an integer, got '{value}'")


def show_history(config, clear=False, file=None, session_id=None) -> int:
    history = RunHistory(Path(config.output_dir) / HISTORY_FILE)
    if clear:
        history.clear_history()
        print("History cleared.")
        return EXIT_OK
    if session_id:
        session = history.get_session_by_id(session_id)
        if session is None:
            print(f"No recorded run with id {session_id}")
            return EXIT_OK
        _print_session(session)
        for path in session["files"]:
            print(f"  {path}")
        _print_summary(session.get("summary", {}))
        return EXIT_OK
    if file:
        session = history.find_session_for_file(file)
        if session is None:
            print(f"No recorded run wrote {file}")
            return EXIT_OK
        sessions = [session]
    else:
        sessions = history.get_sessions()
    if not sessions:
        print("No runs recorded.")
    for session in sessions:
        _print_session(session)
    return EXIT_OK


def _print_session(session):
    print(f"{session['timestamp']}  {session['command']:<12} {session['config_hash']}  "
          f"{session['count']} file(s)  {session['id']}")


def _print_summary(summary, indent="  "):
    for key, value in summary.items():
        if isinstance(value, dict):
            print(f"{indent}{key}:")
            _print_summary(value, indent + "  ")
        elif isinstance(value, float):
            print(f"{indent}{key}: {value:.6g}")
        else:
            print(f"{indent}{key}: {value}")


def exit_code_for(error) -> int:
    if error is None:
        return EXIT_OK
    if isinstance(error, ValidationError):
        return EXIT_CONFIG
    if isinstance(error, NumericalError):
        return EXIT_NUMERIC
    raise error


def main(argv: Optional[List[str]] = None) -> int:
    """Run one command; returns the process exit code."""
    args = build_parser().parse_args(argv)
    configure_logging(args.verbose, args.quiet)

    try:
        config = load_config(args)
    except ValidationError as e:
        print(f"Config error: {e}", file=sys.stderr)
        return EXIT_CONFIG

    if args.command == "history":
        return show_history(config, args.clear, args.file, args.session_id)

    result = ResonanceLab(config).run(args.command)
    print(result)
    if result.success:
        for path in result.files:
            print(f"  wrote {path}")
        _print_summary(result.summary)
    else:
        print(f"Error: {result.error}", file=sys.stderr)
    return exit_code_for(result.error)
