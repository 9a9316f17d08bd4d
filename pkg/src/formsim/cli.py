"""Command-line entry point.

    formsim scenario <name> --emit FILE
    formsim run --config FILE --out CSV [--metrics JSON]
    formsim metrics --log CSV [--tail F]
    formsim plotdata --log CSV --out DIR

Exit codes: 0 ok, 1 I/O failure, 2 usage/parse/validation error,
3 simulation abort.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from formsim import config as cfgio
from formsim import engine, scenarios, telemetry
from formsim._atomic import atomic_write_text
from formsim.errors import EmptyLog, ParseError, SimulationAbort, ValidationError

EXIT_OK, EXIT_IO, EXIT_INVALID, EXIT_ABORT = 0, 1, 2, 3

_LEVELS = {
    "error": logging.ERROR,
    "warn": logging.WARNING,
    "info": logging.INFO,
    "debug": logging.DEBUG,
}


def _setup_logging() -> None:
    name = os.environ.get("FORMSIM_LOG_LEVEL", "warn").strip().lower()
    level = _LEVELS.get(name, logging.WARNING)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", force=True)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="formsim", description="Multi-UAV formation simulator")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("run", help="simulate a scenario file")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True, help="telemetry CSV")
    p.add_argument("--metrics", help="also write the metrics report as JSON")
    p.add_argument("--tail", type=float, default=0.25)

    p = sub.add_parser("scenario", help="write a built-in scenario file")
    p.add_argument("name", choices=sorted(scenarios.BUILTIN))
    p.add_argument("--emit", required=True)

    p = sub.add_parser("metrics", help="summarize a telemetry CSV as JSON")
    p.add_argument("--log", required=True)
    p.add_argument("--tail", type=float, default=0.25)

    p = sub.add_parser("plotdata", help="export plot-ready data series")
    p.add_argument("--log", required=True)
    p.add_argument("--out", required=True)
    return parser


def _metrics_json(log, tail) -> str:
    return json.dumps(engine.metrics(log, tail).to_dict(), indent=2) + "\n"


def _dispatch(args) -> int:
    if args.command == "scenario":
        cfgio.save_config(scenarios.builtin(args.name), args.emit)
    elif args.command == "run":
        config = cfgio.load_config(args.config)
        log = engine.run(config)
        telemetry.write_log(log, args.out)
        if args.metrics:
            atomic_write_text(args.metrics, _metrics_json(log, args.tail))
    elif args.command == "metrics":
        sys.stdout.write(_metrics_json(telemetry.read_log(args.log), args.tail))
    elif args.command == "plotdata":
        for path in telemetry.write_plotdata(telemetry.read_log(args.log), args.out):
            print(path)
    return EXIT_OK


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INVALID
    try:
        return _dispatch(args)
    except (ParseError, ValidationError, EmptyLog, ValueError) as exc:
        print(f"formsim: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except SimulationAbort as exc:
        print(f"formsim: simulation aborted: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ABORT
    except OSError as exc:
        print(f"formsim: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
