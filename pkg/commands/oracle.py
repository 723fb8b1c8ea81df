"""``oracle``: quadrature value of P(S_n > x) for n <= 4, or of a two-model pair."""

from __future__ import annotations

import argparse
from typing import Any

from commands import (
    add_grid_arguments,
    add_model_arguments,
    add_pair_arguments,
    common_options,
    model_from_args,
    pair_from_args,
    x_values,
)
from core.command_types import CommandContext, CommandOutput
from lighttails.oracle import conv_tail_pair, nfold_tail_small
from lighttails.quadrature import QuadratureSpec
from utility import probability_fields


def setup(subparsers: Any) -> argparse.ArgumentParser:
    parser = subparsers.add_parser(
        "oracle", parents=[common_options()], help="numerical convolution tail for small n"
    )
    add_model_arguments(parser)
    add_pair_arguments(parser)
    add_grid_arguments(parser)
    parser.add_argument("--n", type=int, default=2)
    parser.add_argument("--rel-tol", type=float, default=1e-10)
    return parser


def run(args: argparse.Namespace, context: CommandContext) -> CommandOutput:
    model = model_from_args(args)
    pair = pair_from_args(args)
    spec = QuadratureSpec(rel_tol=args.rel_tol)
    rows = []
    for x in x_values(args):
        if pair is not None:
            log_tail = conv_tail_pair(model, pair, x, spec)
            n = 2
        else:
            log_tail = nfold_tail_small(model, args.n, x, spec)
            n = args.n
        rows.append({"x": x, "n": n, **probability_fields("tail", log_tail, args.log10)})
    return CommandOutput(rows)
