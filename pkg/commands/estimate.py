"""``estimate``: Monte Carlo estimate of P(S_n > x) with one of the four estimators."""

from __future__ import annotations

import argparse
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
from core.command_types import CommandContext, CommandOutput
from lighttails.estimators import METHODS, estimate, is_tilted


def setup(subparsers: Any) -> argparse.ArgumentParser:
    parser = subparsers.add_parser(
        "estimate", parents=[common_options()], help="Monte Carlo tail estimate"
    )
    add_model_arguments(parser)
    add_grid_arguments(parser)
    add_run_arguments(parser)
    parser.add_argument("--n", type=int, default=2)
    parser.add_argument("--method", choices=METHODS, default="is")
    parser.add_argument(
        "--center",
        choices=("hazard", "mean"),
        default="hazard",
        help="tilt to lam(x/n) or to the tilted mean x/n (is only)",
    )
    return parser


def run(args: argparse.Namespace, context: CommandContext) -> CommandOutput:
    model = model_from_args(args)
    cfg = run_config(args, context)
    rows = []
    for x in x_values(args):
        if args.method == "is":
            result = is_tilted(model, args.n, x, cfg, center=args.center)
        else:
            result = estimate(args.method, model, args.n, x, cfg)
        rows.append(result.to_record())
    return CommandOutput(rows)
