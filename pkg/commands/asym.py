"""``asym``: closed-form tail asymptotes of n-fold sums, pairs, and split solutions."""

from __future__ import annotations

import argparse
import math
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
from core.command_types import CommandContext, CommandOutput, Row
from core.errors import DomainError
from lighttails.convolve_asymptotics import (
    bkr_convolve_at,
    exp_class_tail,
    nfold_asymptote,
    pair_tail_asymptote,
)
from lighttails.distributions import (
    BkrModel,
    GammaWeibullModel,
    SummandModel,
    weibull_like_view,
)
from utility import probability_fields


def setup(subparsers: Any) -> argparse.ArgumentParser:
    parser = subparsers.add_parser(
        "asym", parents=[common_options()], help="tail asymptote of an n-fold or pair sum"
    )
    add_model_arguments(parser)
    add_pair_arguments(parser)
    add_grid_arguments(parser)
    parser.add_argument("--n", type=int, default=2)
    return parser


def asymptote_log_tail(model: SummandModel, n: int, x: float) -> tuple[float, dict[str, float]]:
    """Log asymptotic tail of the n-fold sum and the constants it uses."""
    if isinstance(model, GammaWeibullModel) and model.beta == 1.0:
        # exponential class: tail k^(g-1) x^(g-1) e^(-k x) / Gamma(g)
        ell = math.exp((model.gamma_shape - 1.0) * math.log(model.k) - math.lgamma(model.gamma_shape))
        terms = [(lambda _x, ell=ell: ell, model.gamma_shape)] * n
        log_tail = exp_class_tail(terms, model.k, x)
        return log_tail, {"c_n": model.k, "p": n * model.gamma_shape - 1.0}
    asym = nfold_asymptote(weibull_like_view(model), n)
    return asym.log_eval(x), {"c_n": asym.c, "p": asym.p, "log_k": asym.log_k}


def run(args: argparse.Namespace, context: CommandContext) -> CommandOutput:
    model = model_from_args(args)
    pair = pair_from_args(args)
    xs = x_values(args)
    rows: list[Row] = []
    if pair is None:
        if args.n < 1:
            raise DomainError(f"--n must be at least 1, got {args.n}")
        for x in xs:
            log_tail, constants = asymptote_log_tail(model, args.n, x)
            rows.append({"x": x, **constants, **probability_fields("tail", log_tail, args.log10)})
        return CommandOutput(rows)

    first = weibull_like_view(model)
    if first.beta == pair.beta:
        asym = pair_tail_asymptote(first, pair)
        for x in xs:
            rows.append(
                {
                    "x": x,
                    "c_n": asym.c,
                    "p": asym.p,
                    "log_k": asym.log_k,
                    **probability_fields("tail", asym.log_eval(x), args.log10),
                }
            )
        return CommandOutput(rows)

    context.logger.info("beta %g != %g; solving the saddle split", first.beta, pair.beta)
    m1, m2 = BkrModel.from_weibull_like(first), BkrModel.from_weibull_like(pair)
    for x in xs:
        point = bkr_convolve_at(m1, m2, x)
        rows.append(
            {
                "x": x,
                **point.split.to_record(),
                **probability_fields("tail", point.log_tail, args.log10),
            }
        )
    return CommandOutput(rows)
