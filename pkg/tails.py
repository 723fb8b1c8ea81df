import argparse
import importlib
import json
import logging
import os
import sys
from logging.handlers import RotatingFileHandler
from pathlib import Path
from typing import Any, Optional, Sequence, TextIO

from core.command_types import CommandContext, CommandModule, CommandOutput
from core.config import TailsConfig, load_config
from core.errors import (
    AccuracyError,
    ConfigError,
    DomainError,
    EnvelopeError,
    NoSolutionError,
    UnsupportedError,
)
from utility import write_csv

COMMANDS_DIR = Path(__file__).resolve().parent / "commands"
RUNS_LOG_NAME = "runs.log"
ERRORS_LOG_NAME = "errors.log"

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_ACCURACY = 3

_NOT_ECHOED = ("config", "handler")


def configure_logging(log_dir: Path) -> tuple[logging.Logger, logging.Logger, logging.Logger]:
    log_dir.mkdir(parents=True, exist_ok=True)
    runs_log = log_dir / RUNS_LOG_NAME
    errors_log = log_dir / ERRORS_LOG_NAME
    runs_log.touch(exist_ok=True)
    errors_log.touch(exist_ok=True)

    formatter = logging.Formatter(
        "%(asctime)s | %(levelname)s | %(name)s | %(message)s"
    )

    app_logger = logging.getLogger("lighttails")
    app_logger.setLevel(logging.INFO)
    if not app_logger.handlers:
        stream_handler = logging.StreamHandler()
        stream_handler.setFormatter(formatter)
        app_logger.addHandler(stream_handler)

    run_logger = logging.getLogger("RunLogger")
    run_logger.setLevel(logging.INFO)
    if not run_logger.handlers:
        run_handler = RotatingFileHandler(
            runs_log,
            maxBytes=1_000_000,
            backupCount=3,
            encoding="utf-8",
        )
        run_handler.setFormatter(logging.Formatter("%(asctime)s | %(message)s"))
        run_logger.addHandler(run_handler)

    error_logger = logging.getLogger("ErrorLogger")
    error_logger.setLevel(logging.ERROR)
    if not error_logger.handlers:
        error_handler = RotatingFileHandler(
            errors_log,
            maxBytes=1_000_000,
            backupCount=3,
            encoding="utf-8",
        )
        error_handler.setFormatter(formatter)
        error_logger.addHandler(error_handler)

    return app_logger, run_logger, error_logger


def discover_commands() -> list[str]:
    importlib.invalidate_caches()
    if not COMMANDS_DIR.exists():
        return []

    modules: list[str] = []
    for filename in os.listdir(COMMANDS_DIR):
        if not filename.endswith(".py") or filename == "__init__.py":
            continue
        modules.append(f"{COMMANDS_DIR.name}.{Path(filename).stem}")

    return sorted(modules)


def build_parser() -> tuple[argparse.ArgumentParser, dict[str, argparse.ArgumentParser]]:
    parser = argparse.ArgumentParser(
        prog="tails",
        description="Tail probabilities of sums of light-tailed Weibull-type variables.",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    registered: dict[str, argparse.ArgumentParser] = {}
    for name in discover_commands():
        module: CommandModule = importlib.import_module(name)  # type: ignore[assignment]
        subparser = module.setup(subparsers)
        subparser.set_defaults(handler=module.run)
        registered[name.rsplit(".", 1)[-1]] = subparser
    return parser, registered


def _load_config_file(path: str) -> dict[str, Any]:
    try:
        with open(path, encoding="utf-8") as handle:
            data = json.load(handle)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config file {path!r}: {exc}") from exc
    if isinstance(data, dict) and isinstance(data.get("config"), dict):
        data = data["config"]
    if not isinstance(data, dict):
        raise ConfigError(f"config file {path!r} must hold a flat JSON object")
    return {k: v for k, v in data.items() if k not in ("command",) + _NOT_ECHOED}


def parse_arguments(
    parser: argparse.ArgumentParser,
    registered: dict[str, argparse.ArgumentParser],
    argv: Optional[Sequence[str]],
) -> argparse.Namespace:
    """Parse argv; a --config file supplies defaults that explicit flags override."""
    args = parser.parse_args(argv)
    if args.config:
        registered[args.command].set_defaults(**_load_config_file(args.config))
        args = parser.parse_args(argv)
    return args


def resolved_config(args: argparse.Namespace) -> dict[str, Any]:
    return {k: v for k, v in vars(args).items() if k not in _NOT_ECHOED}


def emit(
    stream: TextIO, command: str, config: dict[str, Any], output: CommandOutput, fmt: str
) -> None:
    if fmt == "csv":
        write_csv(stream, command, output.rows, output.columns)
        return
    json.dump({"command": command, "config": config, "results": output.rows}, stream, indent=2)
    stream.write("\n")


def run_cli(argv: Optional[Sequence[str]] = None, stdout: Optional[TextIO] = None) -> int:
    stdout = stdout or sys.stdout
    try:
        config: TailsConfig = load_config()
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    app_logger, run_logger, error_logger = configure_logging(config.log_dir)
    parser, registered = build_parser()
    try:
        args = parse_arguments(parser, registered, argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    if config.seed_override is not None and hasattr(args, "seed"):
        args.seed = config.seed_override
    if args.output_format is None:
        args.output_format = config.output_format

    echo = resolved_config(args)
    run_logger.info("command=%s | config=%s", args.command, json.dumps(echo, sort_keys=True))
    context = CommandContext(
        config=config,
        logger=app_logger,
        run_logger=run_logger,
        error_logger=error_logger,
        stdout=stdout,
    )

    try:
        output = args.handler(args, context)
    except (DomainError, UnsupportedError, NoSolutionError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        error_logger.error("command=%s | %s: %s", args.command, type(exc).__name__, exc)
        return EXIT_USAGE
    except (AccuracyError, EnvelopeError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        error_logger.error("command=%s | %s: %s", args.command, type(exc).__name__, exc)
        return EXIT_ACCURACY
    except Exception:  # noqa: BLE001
        error_logger.exception("command=%s failed", args.command)
        print("error: unexpected failure; see the error log", file=sys.stderr)
        return EXIT_FAILURE

    emit(stdout, args.command, echo, output, args.output_format)
    return EXIT_OK


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
