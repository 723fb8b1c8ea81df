"""Subcommands of tails.py; each module exposes ``setup(subparsers)`` and ``run(args, context)``.

Shared flag groups live here so that every command reads models, x-grids and run
settings the same way.
"""

from __future__ import annotations

import argparse
from typing import Any, Optional

from core.command_types import CommandContext
from core.errors import DomainError
from lighttails.distributions import SummandModel, WeibullLikeModel, model_from_record
from lighttails.estimators import RunConfig
from utility import parse_x_grid

FAMILIES = ("weibull", "weibull-like", "gamma-weibull")
DEFAULT_SEED = 1


def common_options() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("--config", help="flat JSON file of flag values (an earlier run's echo)")
    parent.add_argument("--format", choices=("json", "csv"), default=None, dest="output_format")
    parent.add_argument(
        "--no-log10",
        dest="log10",
        action="store_false",
        help="report plain probabilities instead of log10 values",
    )
    return parent


def add_model_arguments(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("summand model")
    group.add_argument("--family", choices=FAMILIES, default="weibull")
    group.add_argument("--alpha", type=float, default=0.0)
    group.add_argument("--beta", type=float, default=2.0)
    group.add_argument("--c", type=float, default=1.0)
    group.add_argument("--d", type=float, default=None, help="defaults to beta * c")
    group.add_argument("--k", type=float, default=None, help="gamma-weibull rate; defaults to c")
    group.add_argument("--gamma", type=float, default=None, help="gamma-weibull shape; defaults to beta")


def add_pair_arguments(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("second summand (weibull-like)")
    group.add_argument("--alpha2", type=float, default=None)
    group.add_argument("--beta2", type=float, default=None)
    group.add_argument("--c2", type=float, default=None)
    group.add_argument("--d2", type=float, default=None)


def add_grid_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--x", default=None, help="value, comma list, or lo:hi:count")
    parser.add_argument("--geom", action="store_true", help="space a lo:hi:count grid geometrically")


def add_run_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--samples", type=int, default=100_000)
    parser.add_argument("--seed", type=int, default=DEFAULT_SEED)
    parser.add_argument("--chunks", type=int, default=None)


def model_from_args(args: argparse.Namespace) -> SummandModel:
    record: dict[str, Any] = {"family": args.family, "beta": args.beta, "c": args.c}
    if args.family == "weibull-like":
        record["alpha"] = args.alpha
        record["d"] = args.d if args.d is not None else args.beta * args.c
    elif args.family == "gamma-weibull":
        record["k"] = args.k if args.k is not None else args.c
        record["gamma"] = args.gamma if args.gamma is not None else args.beta
    return model_from_record(record)


def pair_from_args(args: argparse.Namespace) -> Optional[WeibullLikeModel]:
    if args.beta2 is None:
        return None
    c2 = args.c2 if args.c2 is not None else 1.0
    return WeibullLikeModel(
        alpha=args.alpha2 if args.alpha2 is not None else 0.0,
        beta=args.beta2,
        c=c2,
        d=args.d2 if args.d2 is not None else args.beta2 * c2,
    )


def x_values(args: argparse.Namespace) -> list[float]:
    if args.x is None:
        raise DomainError("missing --x (a value, comma list, or lo:hi:count)")
    try:
        return parse_x_grid(str(args.x), geometric=args.geom)
    except ValueError as exc:
        raise DomainError(str(exc)) from exc


def run_config(args: argparse.Namespace, context: CommandContext) -> RunConfig:
    chunks = args.chunks if args.chunks is not None else context.config.default_chunks
    return RunConfig(
        n_samples=args.samples,
        seed=args.seed,
        n_chunks=chunks,
        workers=context.config.workers,
    )
