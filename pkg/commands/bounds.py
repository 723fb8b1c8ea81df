"""``bounds``: incomplete-gamma sandwich for gamma-Weibull sums."""

from __future__ import annotations

import argparse
from typing import Any

from commands import add_grid_arguments, add_model_arguments, common_options, model_from_args, x_values
from core.command_types import CommandContext, CommandOutput, Row
from core.errors import DomainError
from lighttails.bounds import sum_tail_bounds, upper_bound_quality
from lighttails.distributions import exact_law
from utility import parse_float_list, present_probability, to_log10


def setup(subparsers: Any) -> argparse.ArgumentParser:
    parser = subparsers.add_parser(
        "bounds", parents=[common_options()], help="lower and upper incomplete-gamma bounds"
    )
    add_model_arguments(parser)
    add_grid_arguments(parser)
    parser.add_argument("--n", type=int, default=2)
    parser.add_argument(
        "--gammas", default=None, help="comma list of per-summand gamma shapes (overrides --n)"
    )
    return parser


def run(args: argparse.Namespace, context: CommandContext) -> CommandOutput:
    law = exact_law(model_from_args(args))
    if args.gammas:
        try:
            gammas = parse_float_list(args.gammas)
        except ValueError as exc:
            raise DomainError(str(exc)) from exc
    else:
        if args.n < 1:
            raise DomainError(f"--n must be at least 1, got {args.n}")
        gammas = [law.gamma_shape] * args.n
    homogeneous = all(g == law.gamma_shape for g in gammas)
    rows: list[Row] = []
    for x in x_values(args):
        result = sum_tail_bounds(gammas, law.k, law.beta, x)
        row: Row = {
            "x": x,
            "n": result.n,
            "gamma0": result.gamma0,
            "lower": present_probability(result.lower, args.log10),
            "upper": present_probability(result.upper, args.log10),
        }
        if homogeneous and law.beta > 1.0 and result.n > 1:
            quality = upper_bound_quality(law, result.n, x)
            row["log10_upper_over_asym"] = to_log10(quality.log_ratio)
            row["degree"] = quality.polynomial_degree
        rows.append(row)
    return CommandOutput(rows)
