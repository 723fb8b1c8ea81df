from __future__ import annotations

import argparse
import logging
from dataclasses import dataclass
from typing import Any, Optional, Sequence, TextIO

from typing_extensions import Protocol

from core.config import TailsConfig

Row = dict[str, Any]


@dataclass
class CommandContext:
    config: TailsConfig
    logger: logging.Logger
    run_logger: logging.Logger
    error_logger: logging.Logger
    stdout: TextIO


@dataclass(frozen=True)
class CommandOutput:
    rows: list[Row]
    columns: Optional[Sequence[str]] = None


class CommandModule(Protocol):
    """Shape of a module under commands/: it registers a subparser and runs it."""

    def setup(self, subparsers: Any) -> argparse.ArgumentParser: ...

    def run(self, args: argparse.Namespace, context: CommandContext) -> CommandOutput: ...
