"""``compare``: every applicable method side by side over an x-grid."""

from __future__ import annotations

import argparse
import logging
import math
from typing import Any, Optional

from commands import (
    add_grid_arguments,
    add_model_arguments,
    add_run_arguments,
    common_options,
    model_from_args,
    run_config,
    x_values,
)
from commands.asym import asymptote_log_tail
from core.command_types import CommandContext, CommandOutput, Row
from core.errors import EnvelopeError, UnsupportedError
from lighttails.bounds import sum_tail_bounds
from lighttails.distributions import exact_law
from lighttails.estimators import METHODS, estimate
from lighttails.oracle import nfold_tail_small
from utility import present_probability

logger = logging.getLogger(__name__)

COLUMNS = ("x", "asym", "lower", "upper", "crude", "is", "cond", "ak", "oracle", "flags")
ORACLE_MAX_N = 4


def setup(subparsers: Any) -> argparse.ArgumentParser:
    parser = subparsers.add_parser(
        "compare", parents=[common_options()], help="all methods over an x-grid"
    )
    add_model_arguments(parser)
    add_grid_arguments(parser)
    add_run_arguments(parser)
    parser.add_argument("--n", type=int, default=2)
    return parser


def _log(value: float) -> float:
    return math.log(value) if value > 0.0 else -math.inf


def run(args: argparse.Namespace, context: CommandContext) -> CommandOutput:
    law = exact_law(model_from_args(args))
    n = args.n
    cfg = run_config(args, context)
    rows: list[Row] = []
    for x in x_values(args):
        flags: list[str] = []
        row: Row = {"x": x}
        asym: Optional[float] = None
        try:
            asym = asymptote_log_tail(law, n, x)[0]
        except UnsupportedError as exc:
            flags.append("asym:unsupported")
            logger.info("no asymptote: %s", exc)
        bounds = sum_tail_bounds([law.gamma_shape] * n, law.k, law.beta, x)
        row["asym"] = present_probability(asym, args.log10)
        row["lower"] = present_probability(bounds.lower, args.log10)
        row["upper"] = present_probability(bounds.upper, args.log10)
        for method in METHODS:
            if method in ("cond", "ak") and n < 2:
                row[method] = None
                continue
            try:
                result = estimate(method, law, n, x, cfg)
            except (UnsupportedError, EnvelopeError) as exc:
                row[method] = None
                flags.append(f"{method}:unavailable")
                logger.info("%s skipped at x=%g: %s", method, x, exc)
                continue
            if result.below_resolution:
                flags.append(f"{method}:below_resolution")
                row[method] = 0.0 if not args.log10 else -math.inf
            else:
                row[method] = present_probability(_log(result.estimate), args.log10)
        row["oracle"] = (
            present_probability(nfold_tail_small(law, n, x), args.log10)
            if n <= ORACLE_MAX_N
            else None
        )
        row["flags"] = ";".join(flags)
        rows.append(row)
    return CommandOutput(rows, columns=COLUMNS)
