"""``compound``: tail of the compound Poisson sum S_N."""

from __future__ import annotations

import argparse
import math
from typing import Any

from commands import (
    add_grid_arguments,
    add_model_arguments,
    add_run_arguments,
    common_options,
    model_from_args,
    run_config,
    x_values,
)
from core.command_types import CommandContext, CommandOutput, Row
from lighttails.compound_poisson import CompoundModel, esscher_approximation, log_asym_tail
from lighttails.estimators import compound_tail_mc
from utility import probability_fields


def setup(subparsers: Any) -> argparse.ArgumentParser:
    parser = subparsers.add_parser(
        "compound", parents=[common_options()], help="compound Poisson tail approximations"
    )
    add_model_arguments(parser)
    add_grid_arguments(parser)
    add_run_arguments(parser)
    parser.add_argument("--mu", type=float, default=1.0)
    parser.add_argument("--method", choices=("esscher", "logasym", "mc"), default="esscher")
    parser.add_argument(
        "--variant", choices=("consistent", "rate-weighted"), default="consistent"
    )
    return parser


def run(args: argparse.Namespace, context: CommandContext) -> CommandOutput:
    cm = CompoundModel(mu=args.mu, severity=model_from_args(args))
    rows: list[Row] = []
    for x in x_values(args):
        row: Row = {"x": x, "method": args.method}
        if args.method == "esscher":
            result = esscher_approximation(cm, x)
            row.update(probability_fields("tail", result.log_value, args.log10))
            row.update(theta=result.theta, ell=result.ell)
        elif args.method == "logasym":
            row.update(probability_fields("tail", log_asym_tail(cm, x, args.variant), args.log10))
            row["variant"] = args.variant
        else:
            mc = compound_tail_mc(cm, x, run_config(args, context))
            log_value = math.log(mc.estimate) if mc.estimate > 0.0 else -math.inf
            row.update(probability_fields("tail", log_value, args.log10))
            row.update(rel_error=mc.rel_error, terms=len(mc.terms))
        rows.append(row)
    return CommandOutput(rows)
