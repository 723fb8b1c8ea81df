"""Efficiency table of the Monte Carlo estimators over an x-grid, written as CSV.

Run from the repository root: ``python -m scripts.efficiency --beta 2 --n 2 --x 2:8:4``.
"""

import argparse
import sys
from typing import Optional, Sequence, TextIO

from core.config import load_config
from lighttails.distributions import vanilla_weibull
from lighttails.estimators import METHODS, RunConfig, efficiency_report
from utility import parse_x_grid, write_csv

COLUMNS = ("method", "x", "estimate", "rel_error", "r2", "log_efficiency")


def main(argv: Optional[Sequence[str]] = None, stdout: Optional[TextIO] = None) -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--beta", type=float, default=2.0)
    parser.add_argument("--c", type=float, default=1.0)
    parser.add_argument("--n", type=int, default=2)
    parser.add_argument("--x", default="2:8:4")
    parser.add_argument("--methods", default=",".join(METHODS))
    parser.add_argument("--samples", type=int, default=100_000)
    parser.add_argument("--seed", type=int, default=1)
    args = parser.parse_args(argv)

    config = load_config()
    cfg = RunConfig(
        n_samples=args.samples,
        seed=config.seed_override if config.seed_override is not None else args.seed,
        n_chunks=config.default_chunks,
        workers=config.workers,
    )
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    rows = efficiency_report(
        vanilla_weibull(args.beta, args.c), args.n, parse_x_grid(args.x), cfg, methods
    )
    write_csv(stdout or sys.stdout, "efficiency", [row.to_record() for row in rows], COLUMNS)


if __name__ == "__main__":
    main()
